use fiscal_tiebout_rdd::panel::{aggregate_referenda, Referendum, YearOutcome};
use fiscal_tiebout_rdd::*;
use proptest::prelude::*;

fn small_params() -> impl Strategy<Value = DgpParams> {
    (2u32..5, 2u32..5, 2u32..6, 0.0f64..1.0, 0.0f64..0.5, 0.0f64..1.0).prop_map(
        |(rows, cols, years, prob, under, shared)| DgpParams {
            grid_rows: rows,
            grid_cols: cols,
            years,
            referendum_prob: prob,
            loss_underreport: under,
            shared_district_prob: shared,
            ..DgpParams::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_panels_satisfy_invariants(params in small_params(), seed in any::<u64>()) {
        let panel = generate_panel(&params, seed).unwrap();
        prop_assert_eq!(panel.rows.len() as u32, params.municipalities() * params.years);
        for r in &panel.rows {
            prop_assert_eq!(r.win, r.margin.map(|m| m >= 0.0));
            if let Some(m) = r.margin {
                prop_assert!((-0.5..=0.5).contains(&m));
            }
            prop_assert!(r.avg_tax > 0.0 && r.income_pc > 0.0 && r.home_value > 0.0);
        }
        for &(a, b) in &panel.adjacency {
            prop_assert!(a < b);
        }
        let nb = panel.neighbors();
        for (a, list) in &nb {
            for b in list {
                prop_assert!(nb[b].contains(a));
            }
        }
    }

    #[test]
    fn csv_round_trip(params in small_params(), seed in any::<u64>()) {
        let panel = generate_panel(&params, seed).unwrap();
        let (mut rows, mut edges) = (Vec::new(), Vec::new());
        panel.write_csv(&mut rows).unwrap();
        panel.write_adjacency_csv(&mut edges).unwrap();
        let back = Panel::read_csv(&rows[..], &edges[..]).unwrap();
        prop_assert_eq!(back.rows, panel.rows);
        prop_assert_eq!(back.adjacency, panel.adjacency);
    }

    #[test]
    fn aggregation_keeps_only_unanimous_years(margins in prop::collection::vec(-0.5f64..0.5, 1..5)) {
        let votes: Vec<Referendum> = margins.iter().map(|&margin| Referendum { muni_id: 1, year: 2000, margin }).collect();
        let wins = margins.iter().filter(|&&m| m >= 0.0).count();
        match aggregate_referenda(&votes)[&(1, 2000)] {
            YearOutcome::Usable { margin, count } => {
                prop_assert!(wins == 0 || wins == margins.len());
                prop_assert_eq!(count, margins.len());
                let mean = margins.iter().sum::<f64>() / margins.len() as f64;
                prop_assert!((margin - mean).abs() < 1e-15);
                prop_assert_eq!(margin >= 0.0, wins > 0);
            }
            YearOutcome::Mixed { count } => {
                prop_assert!(wins > 0 && wins < margins.len());
                prop_assert_eq!(count, margins.len());
            }
        }
    }

    #[test]
    fn estimates_are_well_formed(seed in any::<u64>(), lag in 1u32..4) {
        let panel = generate_panel(&DgpParams::default(), seed).unwrap();
        for est in [
            sharp_rdd_poly(&panel, OutcomeSpec::growth(Field::HomeValue), lag).unwrap(),
            local_linear_rdd(&panel, OutcomeSpec::growth(Field::AvgTax), lag, None).unwrap(),
        ] {
            prop_assert!(est.std_error > 0.0);
            prop_assert!((0.0..=1.0).contains(&est.p_value));
            prop_assert_eq!(est.bandwidth.is_some(), est.spec == Spec::LocalLinear);
        }
    }
}
