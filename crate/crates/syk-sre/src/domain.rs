//! Validated parameter types shared by every solver.

use crate::error::{Error, Result};

/// Physical knobs of the two-cluster model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Majoranas per side; the total system has `2 * n_per_side` Majoranas.
    pub n_per_side: usize,
    pub coupling_j: f64,
    pub hopping_mu: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(n_per_side: usize, coupling_j: f64, hopping_mu: f64, beta: f64) -> Self {
        Self { n_per_side, coupling_j, hopping_mu, beta }
    }

    /// Qubit count `N_q` used in every `+N ln 2` term.
    pub fn qubits(&self) -> usize {
        self.n_per_side
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }

    pub fn with_hopping(&self, hopping_mu: f64) -> Self {
        Self { hopping_mu, ..*self }
    }

    /// Energy unit: J when J > 0, otherwise μ, otherwise 1.
    pub fn energy_unit(&self) -> f64 {
        if self.coupling_j > 0.0 {
            self.coupling_j
        } else if self.hopping_mu > 0.0 {
            self.hopping_mu
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_side == 0 {
            return Err(Error::InvalidParams("n_per_side must be at least 1".into()));
        }
        for (name, v) in [("coupling", self.coupling_j), ("hopping", self.hopping_mu), ("beta", self.beta)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("non-finite {name}")));
            }
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("negative {name}")));
            }
        }
        Ok(())
    }
}

/// Uniform slicing of one β-length branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    pub slices_m: usize,
    pub dtau: f64,
}

impl TauGrid {
    /// Grid with `dtau = beta / m`. Parity is checked by [`validate_params`].
    pub fn new(beta: f64, slices_m: usize) -> Self {
        Self { slices_m, dtau: beta / slices_m as f64 }
    }

    /// Smallest even M with `beta / M <= dtau_max` (at least `min_m`).
    pub fn with_max_dtau(beta: f64, dtau_max: f64, min_m: usize) -> Self {
        let mut m = (beta / dtau_max).ceil() as usize;
        m = m.max(min_m).max(2);
        if m % 2 == 1 {
            m += 1;
        }
        Self::new(beta, m)
    }

    pub fn beta(&self) -> f64 {
        self.dtau * self.slices_m as f64
    }

    pub fn doubled(&self) -> Self {
        Self { slices_m: 2 * self.slices_m, dtau: self.dtau }
    }
}

/// How the slice count is chosen at each β of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy {
    /// Same M at every β (Δτ grows with β).
    FixedSlices(usize),
    /// Smallest even M with Δτ ≤ `dtau`, never below `min_slices`.
    MaxDtau { dtau: f64, min_slices: usize },
}

impl GridPolicy {
    pub fn grid(&self, beta: f64) -> TauGrid {
        match *self {
            GridPolicy::FixedSlices(m) => TauGrid::new(beta, m),
            GridPolicy::MaxDtau { dtau, min_slices } => TauGrid::with_max_dtau(beta, dtau, min_slices),
        }
    }
}

/// Boundary sector `(σ_L, σ_R)` of the auxiliary Ising spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorLabel {
    pub sigma_l: i8,
    pub sigma_r: i8,
}

impl SectorLabel {
    pub const ALL: [SectorLabel; 4] = [
        SectorLabel { sigma_l: 1, sigma_r: 1 },
        SectorLabel { sigma_l: 1, sigma_r: -1 },
        SectorLabel { sigma_l: -1, sigma_r: 1 },
        SectorLabel { sigma_l: -1, sigma_r: -1 },
    ];

    pub fn new(sigma_l: i8, sigma_r: i8) -> Result<Self> {
        if sigma_l.abs() != 1 || sigma_r.abs() != 1 {
            return Err(Error::InvalidParams("sector spins must be +1 or -1".into()));
        }
        Ok(Self { sigma_l, sigma_r })
    }

    /// The partner `(−σ_L, −σ_R)` with identical determinant.
    pub fn paired(self) -> Self {
        Self { sigma_l: -self.sigma_l, sigma_r: -self.sigma_r }
    }

    /// `η = σ_L σ_R`, the only gauge-invariant combination.
    pub fn eta(self) -> i8 {
        self.sigma_l * self.sigma_r
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|s| *s == self).unwrap()
    }
}

/// Temperature regime after validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    /// β = 0; observables come from maximally-mixed closed forms.
    Infinite,
    Finite(TauGrid),
}

/// A validated `(params, grid)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedConfig {
    pub params: ModelParams,
    pub grid: TauGrid,
    pub temperature: Temperature,
}

pub fn validate_params(params: ModelParams, grid: TauGrid) -> Result<CheckedConfig> {
    params.validate()?;
    if grid.slices_m == 0 {
        return Err(Error::InvalidGrid("zero slice count".into()));
    }
    if !grid.slices_m.is_multiple_of(2) {
        return Err(Error::InvalidGrid("odd slice count".into()));
    }
    if !grid.dtau.is_finite() || grid.dtau < 0.0 {
        return Err(Error::InvalidGrid("dtau must be finite and non-negative".into()));
    }
    let beta = params.beta;
    let span = grid.beta();
    let mismatch = if beta == 0.0 { span.abs() > 0.0 } else { ((span - beta) / beta).abs() > 1e-12 };
    if mismatch {
        return Err(Error::InvalidGrid(format!("dtau*M = {span} does not match beta = {beta}")));
    }
    let temperature = if beta == 0.0 { Temperature::Infinite } else { Temperature::Finite(grid) };
    Ok(CheckedConfig { params, grid, temperature })
}
