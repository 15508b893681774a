mod common;

use lampworld::belief::{belief_init, belief_step, Level1Reading};
use lampworld::induction::{run_automaton, Automaton, Level1Model};
use lampworld::trace::{replay, Recorder, Trace, Verdict, WorldId};
use lampworld::world::{self, Cell, Eye, Move, Phase};
use proptest::prelude::*;

fn moves() -> impl Strategy<Value = Vec<u8>> {
    // PutCross twice as likely so sets actually finish
    prop::collection::vec(prop_oneof![0u8..8, Just(4u8)], 0..400)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulator_invariants(seed in any::<u64>(), codes in moves()) {
        let mut s = world::initial_state(seed);
        for code in codes {
            let mv = Move::from_code(code).unwrap();
            let (next, lamps) = world::step(&s, mv);
            if lamps.bad_move {
                prop_assert_eq!(&next, &s);
            }
            prop_assert!(!(lamps.cross && lamps.o));
            let diff = next.board.count(Cell::Cross) as i64 - next.board.count(Cell::O) as i64;
            prop_assert!((0..=1).contains(&diff));
            prop_assert_eq!(lamps.victory || lamps.loss, next.phase == Phase::Over && s.phase == Phase::Playing);
            s = next;
        }
    }

    #[test]
    fn recorded_traces_round_trip_and_replay(seed in any::<u64>(), codes in moves()) {
        let mut rec = Recorder::new(WorldId::Two, seed);
        for code in codes {
            rec.step(Move::from_code(code).unwrap());
        }
        let text = rec.trace().to_jsonl();
        let back = Trace::from_jsonl(&text).unwrap();
        prop_assert_eq!(&back, rec.trace());
        prop_assert_eq!(replay(&back), Verdict::Consistent);
    }

    #[test]
    fn flipped_lamp_is_found_at_its_index(seed in any::<u64>(), codes in prop::collection::vec(0u8..8, 1..200), pick in any::<prop::sample::Index>(), lamp in 0usize..5) {
        let mut rec = Recorder::new(WorldId::Two, seed);
        for code in codes {
            rec.step(Move::from_code(code).unwrap());
        }
        let records = rec.trace().records();
        let t = pick.index(records.len());
        let mut tampered = Trace::new(WorldId::Two, seed);
        for r in records {
            let mut r = *r;
            if r.t == t as u64 {
                let mut bits = r.lamps.to_bits();
                bits[lamp] ^= 1;
                r.lamps = world::LampView::from_bits(bits).unwrap();
            }
            tampered.append(r).unwrap();
        }
        prop_assert_eq!(replay(&tampered), Verdict::Divergent { t: t as u64 });
    }

    #[test]
    fn ground_truth_trackers_follow_the_world(seed in any::<u64>(), codes in moves()) {
        let model = Level1Model::ground_truth();
        let mut rec = Recorder::new(WorldId::Two, seed);
        let mut at = model.tracker();
        for code in codes {
            let r = rec.step(Move::from_code(code).unwrap());
            at.advance(&model, r.mv, &r.lamps);
            prop_assert_eq!(at.eye(&model), rec.state().eye);
            prop_assert_eq!(at.is_over(&model), rec.state().phase == Phase::Over);
        }
        let states = run_automaton(&Automaton::ground_truth_column(), rec.trace().records());
        prop_assert_eq!(states.len(), rec.trace().len() + 1);
    }

    #[test]
    fn belief_always_holds_the_true_board(seed in any::<u64>(), codes in moves()) {
        let model = Level1Model::ground_truth();
        let mut rec = Recorder::new(WorldId::Two, seed);
        let mut at = model.tracker();
        let mut b = belief_init(Eye::START);
        for code in codes {
            let r = rec.step(Move::from_code(code).unwrap());
            at.advance(&model, r.mv, &r.lamps);
            let reading = Level1Reading { eye: at.eye(&model), over: at.is_over(&model) };
            b = belief_step(&b, r.mv, &r.lamps, reading, None).unwrap();
            prop_assert!(b.contains(&rec.state().board));
        }
    }
}
