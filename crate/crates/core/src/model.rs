//! Jaynes–Cummings–Hubbard chain: configuration, Hamiltonian, jump operators
//! and initial state.
//!
//! Units are such that ħ = 1; rates and frequencies enter as bare numbers.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{ModeLayout, ProjectedBasis, QuantaWindow};
use crate::error::{Error, Result};
use crate::operator::{mode_product, number_op, CMatrix, Ladder, Operator};
use crate::state::DensityMatrix;

/// Photons are qubits: at most one photon per cavity.
pub const PHOTON_LEVELS: usize = 2;

pub const DEFAULT_OMEGA_A: f64 = 0.1;
pub const DEFAULT_OMEGA_P: f64 = 0.1;
pub const DEFAULT_OMEGA_G: f64 = 0.01;

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        impl $name {
            pub fn keyword(self) -> &'static str {
                match self { $($name::$variant => $kw),+ }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($kw => Ok($name::$variant),)+
                    _ => Err(format!("expected one of {}", [$($kw),+].join("|"))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dephasing {
    None,
    /// Number-operator jump terms `g·n_i`.
    LindbladLike,
    /// Explicit phonon modes coupled through `2g (b + b†) a†a`.
    UnitaryPhonon,
}
keyword_enum!(Dephasing { None => "none", LindbladLike => "lindblad", UnitaryPhonon => "unitary" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SinkCoupling {
    PhotonOfLastCavity,
    ExcitonOfLastAtom,
}
keyword_enum!(SinkCoupling { PhotonOfLastCavity => "photon", ExcitonOfLastAtom => "exciton" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DephasingTarget {
    PhotonNumber,
    ExcitonNumber,
}
keyword_enum!(DephasingTarget { PhotonNumber => "photon", ExcitonNumber => "exciton" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialState {
    Vacuum,
    PhotonInFirstCavity,
}
keyword_enum!(InitialState { Vacuum => "vacuum", PhotonInFirstCavity => "photon1" });

/// Full parameter set of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_atoms: usize,
    /// Photon tunnelling between neighbouring cavities.
    pub k: f64,
    /// Photon–atom coupling.
    pub mu: f64,
    /// Dephasing strength. In the phonon model the Hamiltonian carries
    /// `(g + g*) = 2g`, so the effective coupling is twice this value.
    pub g: f64,
    pub omega_a: f64,
    pub omega_p: f64,
    pub omega_g: f64,
    pub rate_in: f64,
    pub rate_out: f64,
    pub dephasing: Dephasing,
    pub sink_coupling: SinkCoupling,
    pub dephasing_target: DephasingTarget,
    pub cavity_loss: f64,
    pub window: QuantaWindow,
    pub initial_state: InitialState,
}

impl ChainConfig {
    /// No-input chain with one photon in the first cavity, one quantum at most.
    pub fn new(n_atoms: usize) -> Self {
        Self {
            n_atoms,
            k: 0.0,
            mu: 0.0,
            g: 0.0,
            omega_a: DEFAULT_OMEGA_A,
            omega_p: DEFAULT_OMEGA_P,
            omega_g: DEFAULT_OMEGA_G,
            rate_in: 0.0,
            rate_out: 0.0,
            dephasing: Dephasing::None,
            sink_coupling: SinkCoupling::ExcitonOfLastAtom,
            dephasing_target: DephasingTarget::PhotonNumber,
            cavity_loss: 0.0,
            window: QuantaWindow { min_quanta: 0, max_quanta: 1, phonon_cap: 1 },
            initial_state: InitialState::PhotonInFirstCavity,
        }
    }

    /// Largest quanta number the layout can hold (every photon, exciton and
    /// the sink occupied).
    pub fn saturated_quanta(&self) -> usize {
        // (PHOTON_LEVELS - 1) photons and one exciton per site, plus the sink
        self.n_atoms * PHOTON_LEVELS + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms < 1 {
            return Err(Error::config("n_atoms", "must be >= 1"));
        }
        let finite = [
            ("k", self.k),
            ("mu", self.mu),
            ("g", self.g),
            ("omega_a", self.omega_a),
            ("omega_p", self.omega_p),
            ("omega_g", self.omega_g),
            ("rate_in", self.rate_in),
            ("rate_out", self.rate_out),
            ("cavity_loss", self.cavity_loss),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        for (key, v) in [("g", self.g), ("rate_in", self.rate_in), ("rate_out", self.rate_out), ("cavity_loss", self.cavity_loss)] {
            if v < 0.0 {
                return Err(Error::config(key, format!("must be >= 0, got {v}")));
            }
        }
        if self.window.max_quanta < self.window.min_quanta {
            return Err(Error::config("max_quanta", "must be >= min_quanta"));
        }
        if self.initial_state == InitialState::PhotonInFirstCavity && !self.window.admits(1) {
            return Err(Error::config("max_quanta", "initial photon needs a window admitting one quantum"));
        }
        if self.initial_state == InitialState::Vacuum && !self.window.admits(0) {
            return Err(Error::config("min_quanta", "vacuum initial state needs min_quanta = 0"));
        }
        if self.dephasing == Dephasing::UnitaryPhonon && self.window.phonon_cap > u8::MAX as usize - 1 {
            return Err(Error::config("phonon_cap", "too large"));
        }
        Ok(())
    }

    /// Non-fatal oddities of an otherwise valid configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.rate_in > 0.0 && self.initial_quanta() >= self.window.max_quanta {
            out.push(format!(
                "rate_in > 0 but max_quanta = {} is saturated by the initial state; the pump is projected out",
                self.window.max_quanta
            ));
        }
        if self.dephasing == Dephasing::UnitaryPhonon && self.g == 0.0 {
            out.push("dephasing = unitary with g = 0: phonons are decoupled".to_string());
        }
        if self.dephasing == Dephasing::UnitaryPhonon && self.window.phonon_cap == 0 {
            out.push("dephasing = unitary with phonon_cap = 0: phonons can never be excited".to_string());
        }
        out
    }

    fn initial_quanta(&self) -> usize {
        match self.initial_state {
            InitialState::Vacuum => 0,
            InitialState::PhotonInFirstCavity => 1,
        }
    }

    /// Everything the Hamiltonian depends on, as exact bit patterns. Equal
    /// keys yield identical Hamiltonians.
    pub fn hamiltonian_key(&self) -> HamiltonianKey {
        let phonon_g = if self.dephasing == Dephasing::UnitaryPhonon { self.g } else { 0.0 };
        HamiltonianKey {
            layout: (self.n_atoms, self.dephasing == Dephasing::UnitaryPhonon, self.window),
            params: [self.k, self.mu, phonon_g, self.omega_a, self.omega_p, self.omega_g].map(f64::to_bits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HamiltonianKey {
    layout: (usize, bool, QuantaWindow),
    params: [u64; 6],
}

/// A jump operator with its rate already folded in (`L = rate · A`).
#[derive(Debug, Clone)]
pub struct LindbladTerm {
    pub label: String,
    pub operator: Operator,
}

pub fn build_layout(config: &ChainConfig) -> Result<ModeLayout> {
    let phonon_levels = match config.dephasing {
        Dephasing::UnitaryPhonon => Some(config.window.phonon_cap.max(1) + 1),
        _ => None,
    };
    ModeLayout::chain(config.n_atoms, PHOTON_LEVELS, phonon_levels)
}

pub fn build_basis(config: &ChainConfig) -> Result<Arc<ProjectedBasis>> {
    config.validate()?;
    let layout = build_layout(config)?;
    Ok(Arc::new(ProjectedBasis::enumerate(layout, config.window)?))
}

fn check_basis(config: &ChainConfig, basis: &ProjectedBasis) -> Result<()> {
    if *basis.layout() != build_layout(config)? {
        return Err(Error::BasisMismatch);
    }
    Ok(())
}

fn accumulate(target: &mut CMatrix, coeff: f64, op: &Operator) {
    if coeff != 0.0 {
        *target += op.elements() * Complex64::new(coeff, 0.0);
    }
}

/// Chain Hamiltonian: on-site energies, nearest-neighbour photon hopping,
/// photon–exciton exchange and (phonon model only) exciton–phonon coupling.
pub fn build_hamiltonian(config: &ChainConfig, basis: &Arc<ProjectedBasis>) -> Result<Operator> {
    check_basis(config, basis)?;
    let layout = basis.layout();
    let n = config.n_atoms;
    let dim = basis.dim();
    let mut h = CMatrix::zeros(dim, dim);

    for site in 1..=n {
        let p = layout.photon(site)?;
        let a = layout.exciton(site)?;
        accumulate(&mut h, config.omega_p, &number_op(basis, p)?);
        accumulate(&mut h, config.omega_a, &number_op(basis, a)?);
        accumulate(&mut h, config.mu, &mode_product(basis, &[Ladder::Lower(p), Ladder::Raise(a)])?);
        accumulate(&mut h, config.mu, &mode_product(basis, &[Ladder::Raise(p), Ladder::Lower(a)])?);
        if site < n {
            let next = layout.photon(site + 1)?;
            accumulate(&mut h, config.k, &mode_product(basis, &[Ladder::Raise(next), Ladder::Lower(p)])?);
            accumulate(&mut h, config.k, &mode_product(basis, &[Ladder::Raise(p), Ladder::Lower(next)])?);
        }
        if config.dephasing == Dephasing::UnitaryPhonon {
            let b = layout.phonon(site)?;
            let coupling = 2.0 * config.g;
            accumulate(&mut h, config.omega_g, &number_op(basis, b)?);
            accumulate(&mut h, coupling, &mode_product(basis, &[Ladder::Lower(b), Ladder::Raise(a), Ladder::Lower(a)])?);
            accumulate(&mut h, coupling, &mode_product(basis, &[Ladder::Raise(b), Ladder::Raise(a), Ladder::Lower(a)])?);
        }
    }
    Operator::from_matrix(basis.clone(), h)?.into_hermitian()
}

/// Jump operators: pump into the first cavity, runoff into the sink,
/// number-operator dephasing and cavity leakage, each only when its rate is
/// non-zero.
pub fn build_lindblad_terms(config: &ChainConfig, basis: &Arc<ProjectedBasis>) -> Result<Vec<LindbladTerm>> {
    check_basis(config, basis)?;
    let layout = basis.layout();
    let n = config.n_atoms;
    let mut terms = Vec::new();
    let mut push = |label: String, rate: f64, factors: &[Ladder]| -> Result<()> {
        let op = mode_product(basis, factors)?.scale(Complex64::new(rate, 0.0));
        terms.push(LindbladTerm { label, operator: op });
        Ok(())
    };

    if config.rate_in > 0.0 {
        push("L_in".into(), config.rate_in, &[Ladder::Raise(layout.photon(1)?)])?;
    }
    if config.rate_out > 0.0 {
        let source = match config.sink_coupling {
            SinkCoupling::PhotonOfLastCavity => layout.photon(n)?,
            SinkCoupling::ExcitonOfLastAtom => layout.exciton(n)?,
        };
        push("L_out".into(), config.rate_out, &[Ladder::Raise(layout.sink()), Ladder::Lower(source)])?;
    }
    if config.dephasing == Dephasing::LindbladLike && config.g > 0.0 {
        for site in 1..=n {
            let mode = match config.dephasing_target {
                DephasingTarget::PhotonNumber => layout.photon(site)?,
                DephasingTarget::ExcitonNumber => layout.exciton(site)?,
            };
            push(format!("D_{site}"), config.g, &[Ladder::Raise(mode), Ladder::Lower(mode)])?;
        }
    }
    if config.cavity_loss > 0.0 {
        for site in 1..=n {
            push(format!("L_det_{site}"), config.cavity_loss, &[Ladder::Lower(layout.photon(site)?)])?;
        }
    }
    Ok(terms)
}

pub fn initial_density_matrix(config: &ChainConfig, basis: &Arc<ProjectedBasis>) -> Result<DensityMatrix> {
    check_basis(config, basis)?;
    let mut occupation = vec![0u8; basis.layout().len()];
    if config.initial_state == InitialState::PhotonInFirstCavity {
        occupation[basis.layout().photon(1)?] = 1;
    }
    let index = basis.index_of(&occupation).ok_or_else(|| {
        Error::config("initial_state", format!("{} is outside the quanta window", config.initial_state))
    })?;
    Ok(DensityMatrix::pure_basis_state(basis.clone(), index))
}

/// Basis, Hamiltonian and jump operators of one configuration.
#[derive(Debug, Clone)]
pub struct ChainModel {
    pub config: ChainConfig,
    pub basis: Arc<ProjectedBasis>,
    pub hamiltonian: Operator,
    pub terms: Vec<LindbladTerm>,
}

impl ChainModel {
    pub fn build(config: &ChainConfig) -> Result<Self> {
        let basis = build_basis(config)?;
        Self::on_basis(config, basis)
    }

    /// Reuses an existing basis; it must match the configuration's layout.
    pub fn on_basis(config: &ChainConfig, basis: Arc<ProjectedBasis>) -> Result<Self> {
        config.validate()?;
        if *basis.window() != config.window {
            return Err(Error::BasisMismatch);
        }
        let hamiltonian = build_hamiltonian(config, &basis)?;
        let terms = build_lindblad_terms(config, &basis)?;
        Ok(Self { config: config.clone(), basis, hamiltonian, terms })
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        initial_density_matrix(&self.config, &self.basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::quanta_op;

    fn config(n: usize, dephasing: Dephasing) -> ChainConfig {
        ChainConfig { dephasing, ..ChainConfig::new(n) }
    }

    #[test]
    fn layout_mode_counts() {
        assert_eq!(build_layout(&config(2, Dephasing::LindbladLike)).unwrap().len(), 5);
        assert_eq!(build_layout(&config(2, Dephasing::UnitaryPhonon)).unwrap().len(), 7);
        assert_eq!(build_layout(&config(1, Dephasing::None)).unwrap().len(), 3);
    }

    #[test]
    fn uncoupled_hamiltonian_is_diagonal_energy() {
        let mut cfg = config(2, Dephasing::UnitaryPhonon);
        cfg.window.max_quanta = 2;
        cfg.omega_a = 0.3;
        cfg.omega_p = 0.7;
        cfg.omega_g = 0.05;
        let basis = build_basis(&cfg).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        let layout = basis.layout();
        for (i, s) in basis.states().iter().enumerate() {
            let mut e = 0.0;
            for site in 1..=2 {
                e += cfg.omega_p * s[layout.photon(site).unwrap()] as f64;
                e += cfg.omega_a * s[layout.exciton(site).unwrap()] as f64;
                e += cfg.omega_g * s[layout.phonon(site).unwrap()] as f64;
            }
            for j in 0..basis.dim() {
                let expected = if i == j { e } else { 0.0 };
                assert!((h.elements()[(i, j)].re - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn photon_sector_is_hopping_matrix() {
        let mut cfg = config(2, Dephasing::None);
        cfg.k = 0.37;
        cfg.window = QuantaWindow { min_quanta: 1, max_quanta: 1, phonon_cap: 0 };
        let basis = build_basis(&cfg).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        let p1 = basis.index_of(&[1, 0, 0, 0, 0]).unwrap();
        let p2 = basis.index_of(&[0, 0, 1, 0, 0]).unwrap();
        let e = |i, j| h.elements()[(i, j)].re;
        assert_eq!([e(p1, p1), e(p1, p2), e(p2, p1), e(p2, p2)], [0.1, 0.37, 0.37, 0.1]);
    }

    #[test]
    fn phonon_coupling_is_doubled() {
        let mut cfg = config(1, Dephasing::UnitaryPhonon);
        cfg.g = 0.25;
        let basis = build_basis(&cfg).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        let from = basis.index_of(&[0, 1, 0, 0]).unwrap();
        let to = basis.index_of(&[0, 1, 1, 0]).unwrap();
        assert!((h.elements()[(to, from)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_conserves_quanta() {
        for dephasing in [Dephasing::None, Dephasing::UnitaryPhonon] {
            let mut cfg = config(3, dephasing);
            cfg.k = 0.8;
            cfg.mu = 0.3;
            cfg.g = 0.4;
            cfg.window.max_quanta = 2;
            let basis = build_basis(&cfg).unwrap();
            let h = build_hamiltonian(&cfg, &basis).unwrap();
            let comm = h.commutator(&quanta_op(&basis)).unwrap();
            assert!(comm.max_abs() <= 1e-12);
            assert!(h.hermitian_deviation() <= 1e-12);
        }
    }

    #[test]
    fn term_sets() {
        let mut cfg = config(2, Dephasing::LindbladLike);
        cfg.rate_out = 1.5;
        let basis = build_basis(&cfg).unwrap();
        let terms = build_lindblad_terms(&cfg, &basis).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].label, "L_out");
        assert!((terms[0].operator.max_abs() - 1.5).abs() < 1e-15);

        let none = config(2, Dephasing::None);
        assert!(build_lindblad_terms(&none, &build_basis(&none).unwrap()).unwrap().is_empty());

        cfg.g = 0.3;
        cfg.rate_out = 0.6;
        let labels: Vec<String> = build_lindblad_terms(&cfg, &basis).unwrap().into_iter().map(|t| t.label).collect();
        assert_eq!(labels, ["L_out", "D_1", "D_2"]);

        let mut phonon = config(2, Dephasing::UnitaryPhonon);
        phonon.g = 0.3;
        assert!(build_lindblad_terms(&phonon, &build_basis(&phonon).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn sink_coupling_selects_source_mode() {
        for (coupling, source) in [(SinkCoupling::PhotonOfLastCavity, [0, 0, 1, 0, 0]), (SinkCoupling::ExcitonOfLastAtom, [0, 0, 0, 1, 0])] {
            let mut cfg = config(2, Dephasing::None);
            cfg.rate_out = 2.0;
            cfg.sink_coupling = coupling;
            let basis = build_basis(&cfg).unwrap();
            let term = &build_lindblad_terms(&cfg, &basis).unwrap()[0];
            let from = basis.index_of(&source).unwrap();
            let to = basis.index_of(&[0, 0, 0, 0, 1]).unwrap();
            assert_eq!(term.operator.elements()[(to, from)].re, 2.0);
            assert!((term.operator.max_abs() - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn saturated_pump_warns() {
        let mut cfg = config(2, Dephasing::None);
        cfg.rate_in = 1.0;
        assert_eq!(cfg.warnings().len(), 1);
        cfg.window.max_quanta = 5;
        assert!(cfg.warnings().is_empty());
    }

    #[test]
    fn initial_states() {
        let cfg = config(2, Dephasing::None);
        let basis = build_basis(&cfg).unwrap();
        let rho = initial_density_matrix(&cfg, &basis).unwrap();
        let j = basis.index_of(&[1, 0, 0, 0, 0]).unwrap();
        assert_eq!(rho.elements()[(j, j)].re, 1.0);
        assert_eq!(rho.trace(), 1.0);

        let vac = ChainConfig { initial_state: InitialState::Vacuum, ..cfg };
        let rho = initial_density_matrix(&vac, &basis).unwrap();
        assert_eq!(rho.elements()[(0, 0)].re, 1.0);
        assert_eq!(rho.trace(), 1.0);
    }

    #[test]
    fn mismatched_basis_rejected() {
        let a = config(2, Dephasing::None);
        let b = config(3, Dephasing::None);
        let basis = build_basis(&b).unwrap();
        assert_eq!(build_hamiltonian(&a, &basis).unwrap_err(), Error::BasisMismatch);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = config(2, Dephasing::None);
        cfg.rate_out = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { ref key, .. }) if key == "rate_out"));
        let mut cfg = config(0, Dephasing::None);
        assert!(cfg.validate().is_err());
        cfg.n_atoms = 1;
        cfg.window.max_quanta = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config { ref key, .. }) if key == "max_quanta"));
    }
}
