mod common;

use common::checks;
use common::*;
use dagwood::amm::{apply_sequence, Mode, Token, Tolerance, TxKind};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn engine_invariants_hold(w in world(), specs in tx_specs(1..30)) {
        checks::engine_invariants(&w, &specs)?;
    }

    #[test]
    fn deposits_and_redeems_scale_reserves_and_supply_together(w in world(), specs in tx_specs(1..30)) {
        let (txs, trace) = random_trace(&w.state, &w.users, &specs);
        for (i, tx) in txs.iter().enumerate() {
            let (before, after) = (&trace[i], &trace[i + 1]);
            let (p, minted) = match &tx.kind {
                TxKind::Deposit { .. } => {
                    let (t, v) = after.wallet(&tx.user).unwrap().iter()
                        .find(|(t, v)| t.is_minted() && **v > before.wallet(&tx.user).unwrap().get(t))
                        .map(|(t, v)| (t.clone(), *v - before.wallet(&tx.user).unwrap().get(t)))
                        .unwrap();
                    let Token::Minted(p) = t else { unreachable!() };
                    (p, v)
                }
                TxKind::Redeem { v, pair } => (pair.clone(), -*v),
                TxKind::Swap { .. } => continue,
            };
            let Some(old) = before.amm(&p) else { continue };
            let new = after.amm(&p).unwrap();
            prop_assert!((old.ratio() - new.ratio()).abs() <= 1e-9 * old.ratio());
            let (s0, s1) = (before.minted_supply(&p), after.minted_supply(&p));
            prop_assert!((s1 - s0 - minted).abs() <= 1e-9 * s0);
            if let TxKind::Deposit { v0, t0, .. } = &tx.kind {
                let i0 = old.pair().index_of(t0.as_atomic().unwrap()).unwrap();
                let expected = v0 / old.reserve(i0) * s0;
                prop_assert!((minted - expected).abs() <= 1e-9 * expected);
            }
        }
    }

    #[test]
    fn rejected_steps_leave_the_state_alone(w in world(), specs in tx_specs(1..30)) {
        let mut state = w.state.clone();
        for spec in &specs {
            let tx = realize(&state, &w.users, spec);
            let before = state.clone();
            match state.step(&tx) {
                Ok(next) => state = next,
                Err(e) => {
                    prop_assert_eq!(&e.tx, &tx);
                    prop_assert_eq!(&state, &before);
                }
            }
        }
    }

    #[test]
    fn audit_mode_freezes_at_the_first_rejection(w in world(), specs in tx_specs(1..30)) {
        let txs: Vec<_> = specs.iter().map(|s| realize(&w.state, &w.users, s)).collect();
        let audit = apply_sequence(&w.state, &txs, Mode::Audit, &Tolerance::default()).unwrap();
        let strict = apply_sequence(&w.state, &txs, Mode::Strict, &Tolerance::default());
        prop_assert_eq!(audit.is_enabled(), strict.is_ok());
        if let Err(e) = strict {
            prop_assert_eq!(audit.first_error(), Some(&e));
        }
        prop_assert_eq!(audit.outcomes.len(), txs.len());
    }
}
