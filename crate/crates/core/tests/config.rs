use cavity_chain::basis::QuantaWindow;
use cavity_chain::config::{parse_axis_values, parse_config, serialize, ObjectiveKind, RunConfig};
use cavity_chain::experiments::{Axis, SweepParam};
use cavity_chain::model::{ChainConfig, Dephasing, DephasingTarget, InitialState, SinkCoupling};
use proptest::prelude::*;

fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.0..5.0f64, (1u32..=40).prop_map(|i| i as f64 / 10.0)]
}

fn axis(param: SweepParam) -> impl Strategy<Value = Axis> {
    proptest::collection::btree_set(0u32..1000, 1..6)
        .prop_map(move |set| Axis::new(param, set.into_iter().map(|i| i as f64 / 37.0).collect()).unwrap())
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    let chain = (1usize..=5, -3.0..3.0f64, -3.0..3.0f64, rate(), rate(), rate(), rate(), 0usize..=3, any::<[bool; 4]>(), 1usize..=4);
    let run = (
        proptest::option::of(axis(SweepParam::RateOut)),
        proptest::option::of(axis(SweepParam::G)),
        any::<bool>(),
        proptest::option::of(0.0..500.0f64),
        1e-4..0.5f64,
        0.0..1000.0f64,
        0.01..0.99f64,
        1usize..500,
    );
    (chain, run).prop_map(|((n, k, mu, g, rate_in, rate_out, loss, deph, flags, max_quanta), (a1, a2, sink_obj, ot, dt, t_max, target, every))| {
        let mut c = ChainConfig::new(n);
        c.k = k;
        c.mu = mu;
        c.g = g;
        c.rate_in = rate_in;
        c.rate_out = rate_out;
        c.cavity_loss = loss;
        c.omega_a = k.abs() / 7.0;
        c.dephasing = [Dephasing::None, Dephasing::LindbladLike, Dephasing::UnitaryPhonon][deph % 3];
        c.sink_coupling = if flags[0] { SinkCoupling::PhotonOfLastCavity } else { SinkCoupling::ExcitonOfLastAtom };
        c.dephasing_target = if flags[1] { DephasingTarget::ExcitonNumber } else { DephasingTarget::PhotonNumber };
        c.initial_state = if flags[2] { InitialState::Vacuum } else { InitialState::PhotonInFirstCavity };
        c.window = QuantaWindow { min_quanta: 0, max_quanta, phonon_cap: usize::from(flags[3]) + 1 };
        let mut r = RunConfig::new(c);
        r.axis2 = if a1.is_some() { a2 } else { None };
        r.axis1 = a1;
        r.objective = if sink_obj { ObjectiveKind::SinkAtTime } else { ObjectiveKind::TimeToReach };
        r.objective_time = ot;
        r.dt = dt;
        r.t_max = t_max;
        r.target = target;
        r.sample_every = every;
        r
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialize_then_parse_is_identity(run in run_config()) {
        prop_assert!(run.validate().is_ok());
        let text = serialize(&run);
        let parsed = parse_config(&text).unwrap();
        prop_assert_eq!(&parsed, &run);
        prop_assert_eq!(serialize(&parsed), text);
    }

    #[test]
    fn parser_never_panics(text in "[a-z_0-9=.,:# \n-]{0,200}") {
        let _ = parse_config(&text);
        let _ = parse_axis_values(&text);
    }
}

#[test]
fn comments_and_spacing() {
    let text = "# figure setup\n  n_atoms = 2   # two sites\nk=1.0 mu = 1.0\n\nrate_in =1.5\trate_out= 1.5\n";
    let run = parse_config(text).unwrap();
    assert_eq!(run.chain.rate_out, 1.5);
    assert_eq!(run.chain.mu, 1.0);
}
