//! Mode layouts and the quanta-projected occupation-number basis.
//!
//! A chain of `N` sites carries, per site, a photon mode, a two-level exciton
//! and optionally a phonon mode. One two-level sink mode closes the layout.
//! The full product space is never materialised: [`ProjectedBasis::enumerate`]
//! walks occupation vectors depth-first and keeps only those inside the
//! [`QuantaWindow`].

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    Photon,
    Exciton,
    Phonon,
    Sink,
}

impl ModeKind {
    /// Whether occupations of this mode count toward the conserved quanta number.
    pub fn carries_quanta(self) -> bool {
        !matches!(self, ModeKind::Phonon)
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModeKind::Photon => "photon",
            ModeKind::Exciton => "exciton",
            ModeKind::Phonon => "phonon",
            ModeKind::Sink => "sink",
        };
        f.write_str(s)
    }
}

/// One quantum mode: its kind, the (1-based) site it belongs to and its
/// local dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSpec {
    pub kind: ModeKind,
    pub site: usize,
    pub levels: usize,
}

/// Ordered list of modes. Construction validates the chain shape, so a
/// `ModeLayout` in hand is always well formed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeLayout {
    modes: Vec<ModeSpec>,
    n_sites: usize,
    has_phonons: bool,
}

impl ModeLayout {
    /// Builds the canonical chain layout: `(photon_i, exciton_i[, phonon_i])`
    /// for `i = 1..=n_sites`, then the sink.
    pub fn chain(n_sites: usize, photon_levels: usize, phonon_levels: Option<usize>) -> Result<Self> {
        let mut modes = Vec::with_capacity(n_sites * 3 + 1);
        for site in 1..=n_sites {
            modes.push(ModeSpec { kind: ModeKind::Photon, site, levels: photon_levels });
            modes.push(ModeSpec { kind: ModeKind::Exciton, site, levels: 2 });
            if let Some(levels) = phonon_levels {
                modes.push(ModeSpec { kind: ModeKind::Phonon, site, levels });
            }
        }
        modes.push(ModeSpec { kind: ModeKind::Sink, site: n_sites, levels: 2 });
        Self::new(modes)
    }

    /// Validates an explicit mode list against the chain invariants.
    pub fn new(modes: Vec<ModeSpec>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidLayout(msg));
        let Some((sink, body)) = modes.split_last() else {
            return bad("layout has no modes".into());
        };
        if sink.kind != ModeKind::Sink {
            return bad("last mode must be the sink".into());
        }
        if sink.levels != 2 {
            return bad("sink must have exactly 2 levels".into());
        }
        let has_phonons = body.iter().any(|m| m.kind == ModeKind::Phonon);
        let per_site = if has_phonons { 3 } else { 2 };
        if body.is_empty() || body.len() % per_site != 0 {
            return bad(format!("expected {per_site} modes per site, got {} non-sink modes", body.len()));
        }
        let n_sites = body.len() / per_site;
        let expected = [ModeKind::Photon, ModeKind::Exciton, ModeKind::Phonon];
        for (i, chunk) in body.chunks(per_site).enumerate() {
            let site = i + 1;
            for (m, kind) in chunk.iter().zip(expected) {
                if m.kind != kind {
                    return bad(format!("site {site}: expected {kind} mode, found {}", m.kind));
                }
                if m.site != site {
                    return bad(format!("{} mode labelled site {} at position of site {site}", m.kind, m.site));
                }
                if m.levels < 2 {
                    return bad(format!("site {site}: {} mode needs at least 2 levels", m.kind));
                }
                if m.kind == ModeKind::Exciton && m.levels != 2 {
                    return bad(format!("site {site}: excitons are two-level"));
                }
                if m.levels > u8::MAX as usize + 1 {
                    return bad(format!("site {site}: {} levels exceed the supported maximum", m.levels));
                }
            }
        }
        if sink.site != n_sites {
            return bad(format!("sink labelled site {}, chain has {n_sites} sites", sink.site));
        }
        Ok(Self { modes, n_sites, has_phonons })
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn has_phonons(&self) -> bool {
        self.has_phonons
    }

    fn per_site(&self) -> usize {
        if self.has_phonons { 3 } else { 2 }
    }

    /// Index of the photon mode of `site` (1-based).
    pub fn photon(&self, site: usize) -> Result<usize> {
        self.site_mode(site, 0)
    }

    pub fn exciton(&self, site: usize) -> Result<usize> {
        self.site_mode(site, 1)
    }

    pub fn phonon(&self, site: usize) -> Result<usize> {
        if !self.has_phonons {
            return Err(Error::InvalidLayout("layout has no phonon modes".into()));
        }
        self.site_mode(site, 2)
    }

    pub fn sink(&self) -> usize {
        self.modes.len() - 1
    }

    fn site_mode(&self, site: usize, offset: usize) -> Result<usize> {
        if site == 0 || site > self.n_sites {
            return Err(Error::InvalidLayout(format!("site {site} outside 1..={}", self.n_sites)));
        }
        Ok((site - 1) * self.per_site() + offset)
    }
}

/// Bounds on the conserved quanta number (photons + excitons + sink) and on
/// the phonon occupation of each site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantaWindow {
    pub min_quanta: usize,
    pub max_quanta: usize,
    pub phonon_cap: usize,
}

impl QuantaWindow {
    pub fn new(min_quanta: usize, max_quanta: usize, phonon_cap: usize) -> Result<Self> {
        if max_quanta < min_quanta {
            return Err(Error::config(
                "max_quanta",
                format!("must be >= min_quanta ({min_quanta}), got {max_quanta}"),
            ));
        }
        Ok(Self { min_quanta, max_quanta, phonon_cap })
    }

    pub fn admits(&self, quanta: usize) -> bool {
        (self.min_quanta..=self.max_quanta).contains(&quanta)
    }
}

/// Occupation vectors inside a quanta window, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedBasis {
    layout: ModeLayout,
    window: QuantaWindow,
    states: Vec<Vec<u8>>,
}

impl ProjectedBasis {
    /// Enumerates all occupation vectors admitted by `window`.
    ///
    /// Fails with [`Error::EmptyBasis`] when no state survives, rather than
    /// returning a zero-dimensional basis.
    pub fn enumerate(layout: ModeLayout, window: QuantaWindow) -> Result<Self> {
        let caps: Vec<u8> = layout
            .modes()
            .iter()
            .map(|m| {
                let top = m.levels - 1;
                let cap = if m.kind == ModeKind::Phonon { top.min(window.phonon_cap) } else { top };
                cap as u8
            })
            .collect();
        let quanta_mask: Vec<bool> = layout.modes().iter().map(|m| m.kind.carries_quanta()).collect();

        // Quanta still attainable from mode `i` onward; prunes branches that
        // cannot reach `min_quanta`.
        let mut reachable = vec![0usize; caps.len() + 1];
        for i in (0..caps.len()).rev() {
            reachable[i] = reachable[i + 1] + if quanta_mask[i] { caps[i] as usize } else { 0 };
        }

        let mut states = Vec::new();
        let mut current = vec![0u8; caps.len()];
        descend(0, 0, &caps, &quanta_mask, &reachable, &window, &mut current, &mut states);

        if states.is_empty() {
            return Err(Error::EmptyBasis { min: window.min_quanta, max: window.max_quanta });
        }
        Ok(Self { layout, window, states })
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn window(&self) -> &QuantaWindow {
        &self.window
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.states.binary_search_by(|s| s.as_slice().cmp(occupation)).ok()
    }

    /// Conserved quanta number of a basis state.
    pub fn quanta(&self, index: usize) -> usize {
        self.states[index]
            .iter()
            .zip(self.layout.modes())
            .filter(|(_, m)| m.kind.carries_quanta())
            .map(|(&n, _)| n as usize)
            .sum()
    }
}

#[allow(clippy::too_many_arguments)]
fn descend(
    mode: usize,
    quanta: usize,
    caps: &[u8],
    quanta_mask: &[bool],
    reachable: &[usize],
    window: &QuantaWindow,
    current: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    if mode == caps.len() {
        if window.admits(quanta) {
            out.push(current.clone());
        }
        return;
    }
    if quanta + reachable[mode] < window.min_quanta {
        return;
    }
    for n in 0..=caps[mode] {
        let q = if quanta_mask[mode] { quanta + n as usize } else { quanta };
        if q > window.max_quanta {
            break;
        }
        current[mode] = n;
        descend(mode + 1, q, caps, quanta_mask, reachable, window, current, out);
    }
    current[mode] = 0;
}
