use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{make_phase_grid, PhaseSpaceGrid, SpatialGrid};
use crate::norms::{inf_float, NormSpec};
use crate::orbitals::{InteractionSpec, ScfParams, TrapSpec};

/// Everything a sweep needs; the sections mirror the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default = "harmonic")]
    pub trap: TrapSpec,
    #[serde(default)]
    pub interaction: InteractionSpec,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub norms: NormsSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn harmonic() -> TrapSpec {
    TrapSpec::Harmonic
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection::default(),
            trap: TrapSpec::Harmonic,
            interaction: InteractionSpec::None,
            grid: GridSection::default(),
            norms: NormsSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub d: usize,
    pub n_list: Vec<usize>,
    /// Orders `k` for the k-particle table.
    pub k_list: Vec<usize>,
    pub seed: u64,
    /// Worker threads; 0 means available parallelism.
    pub jobs: usize,
    /// Small sweep for smoke runs.
    pub quick: bool,
    pub quick_n_list: Vec<usize>,
    pub scf_mixing: f64,
    pub scf_max_iter: usize,
    pub scf_tol: f64,
    pub tf_tol: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            d: 1,
            n_list: vec![8, 16, 32, 64, 128],
            k_list: vec![1, 2],
            seed: 0,
            jobs: 0,
            quick: false,
            quick_n_list: vec![4, 8, 16],
            scf_mixing: 0.3,
            scf_max_iter: 200,
            scf_tol: 1e-8,
            tf_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_width_x: f64,
    pub half_width_p: f64,
    /// Points per phase-space axis (power of two).
    pub n: usize,
    /// Raise the point count to `points_per_particle · N` when larger.
    pub adaptive: bool,
    pub points_per_particle: usize,
    /// Orbital grid refinement over the phase-space x grid for finite
    /// difference solvers.
    pub orbital_refinement: usize,
    /// Points of the Thomas–Fermi grid (same box as the x axis).
    pub tf_points: usize,
    /// Order-2 phase grid: points per axis and half-width.
    pub k_points: usize,
    pub k_half_width: f64,
    /// Largest `N` for which the order-2 grid cross-check is run.
    pub k_check_max_n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            half_width_x: 8.0,
            half_width_p: 8.0,
            n: 512,
            adaptive: true,
            points_per_particle: 16,
            orbital_refinement: 4,
            tf_points: 32768,
            k_points: 48,
            k_half_width: 3.0,
            k_check_max_n: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulusSpec {
    pub enabled: bool,
    pub p: f64,
    pub r: f64,
    #[serde(with = "inf_float")]
    pub q: f64,
}

impl Default for ModulusSpec {
    fn default() -> Self {
        ModulusSpec {
            enabled: true,
            p: 2.0,
            r: 0.5,
            q: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    /// Exponents `p` for the Lᵖ columns.
    pub lp: Vec<f64>,
    /// Negative Sobolev norms of `f_N - f`.
    pub sobolev: Vec<NormSpec>,
    /// Orders `s` of the mollifier bound `|f_N - m_N|_{s,∞}`.
    pub mollifier_s: Vec<f64>,
    pub mollifier_alpha: f64,
    /// Moment order `m` in `‖(|x|+|p|)^m f_N‖_{L²}`.
    pub moment_m: u32,
    /// Translation-modulus column `ω_{p,r,q}(f_N)`.
    pub modulus: ModulusSpec,
}

impl Default for NormsSection {
    fn default() -> Self {
        NormsSection {
            lp: vec![1.0, 2.0, 4.0],
            sobolev: vec![
                NormSpec::Sobolev {
                    s: 0.5,
                    q: f64::INFINITY,
                },
                NormSpec::Sobolev {
                    s: 1.0,
                    q: f64::INFINITY,
                },
            ],
            mollifier_s: vec![0.25, 0.5, 1.0],
            mollifier_alpha: 0.5,
            moment_m: 1,
            modulus: ModulusSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Write binary grid dumps of `f_N`, `m_N`, `ρ_N` and the classical state.
    pub dumps: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            dumps: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if !(1..=3).contains(&r.d) {
            return Err(Error::arg(format!("d must be 1, 2 or 3, got {}", r.d)));
        }
        let list = self.n_list();
        if list.is_empty() || list[0] == 0 {
            return Err(Error::arg("n_list must hold positive particle numbers"));
        }
        if list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("n_list must be strictly increasing"));
        }
        if r.k_list.contains(&0) {
            return Err(Error::arg("k_list entries must be positive"));
        }
        let g = &self.grid;
        if !(g.half_width_x > 0.0 && g.half_width_p > 0.0 && g.k_half_width > 0.0) {
            return Err(Error::arg("grid half-widths must be positive"));
        }
        if !g.n.is_power_of_two() || g.n < 8 || !g.tf_points.is_power_of_two() || g.tf_points < 8 {
            return Err(Error::arg(
                "grid.n and grid.tf_points must be powers of two >= 8",
            ));
        }
        if g.orbital_refinement == 0 || !g.orbital_refinement.is_power_of_two() {
            return Err(Error::arg("grid.orbital_refinement must be a power of two"));
        }
        if !g.k_points.is_multiple_of(2) || g.k_points < 8 {
            return Err(Error::arg("grid.k_points must be even and >= 8"));
        }
        let n = &self.norms;
        for &p in &n.lp {
            NormSpec::Lp { p }.validate()?;
        }
        for s in &n.sobolev {
            s.validate()?;
            if !matches!(s, NormSpec::Sobolev { .. }) {
                return Err(Error::arg(
                    "norms.sobolev entries must have family = \"sobolev\"",
                ));
            }
        }
        if n.mollifier_s.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(Error::arg("mollifier orders must lie in (0, 1]"));
        }
        crate::husimi::MollifierSpec::new(n.mollifier_alpha)?;
        if n.modulus.enabled {
            let m = &n.modulus;
            NormSpec::Lp { p: m.p }.validate()?;
            if !(m.r >= 0.0 && m.q >= 1.0) {
                return Err(Error::arg("modulus needs r >= 0 and q >= 1"));
            }
        }
        if !(r.tf_tol > 0.0 && r.scf_tol > 0.0) {
            return Err(Error::arg("tolerances must be positive"));
        }
        Ok(())
    }

    /// The sweep actually run (`quick_n_list` in quick mode).
    pub fn n_list(&self) -> Vec<usize> {
        if self.run.quick {
            self.run.quick_n_list.clone()
        } else {
            self.run.n_list.clone()
        }
    }

    pub fn scf_params(&self) -> ScfParams {
        ScfParams {
            mixing: self.run.scf_mixing,
            max_iter: self.run.scf_max_iter,
            tol: self.run.scf_tol,
        }
    }

    /// Points per phase-space axis at particle number `n`.
    pub fn points_for(&self, n: usize) -> usize {
        let g = &self.grid;
        if g.adaptive {
            g.n.max((g.points_per_particle * n).next_power_of_two())
        } else {
            g.n
        }
    }

    pub fn phase_grid(&self, n: usize) -> Result<PhaseSpaceGrid> {
        let pts = self.points_for(n);
        make_phase_grid(
            self.run.d,
            self.grid.half_width_x,
            self.grid.half_width_p,
            pts,
            pts,
        )
    }

    /// Orbital grid at `n`: the phase-space x grid for the Hermite basis,
    /// refined for finite-difference eigensolvers.
    pub fn orbital_grid(&self, n: usize) -> Result<SpatialGrid> {
        let pts = self.points_for(n);
        let factor = if self.uses_hermite() {
            1
        } else {
            self.grid.orbital_refinement
        };
        SpatialGrid::new(self.run.d, self.grid.half_width_x, pts * factor)
    }

    pub fn tf_grid(&self) -> Result<SpatialGrid> {
        let n = if self.run.d == 1 {
            self.grid.tf_points
        } else {
            // n^d points: keep the total comparable to the 1-D grid
            let per_axis = (self.grid.tf_points as f64).powf(1.0 / self.run.d as f64) as usize;
            per_axis.next_power_of_two().clamp(8, 512)
        };
        SpatialGrid::new(self.run.d, self.grid.half_width_x, n)
    }

    pub fn uses_hermite(&self) -> bool {
        self.run.d == 1 && self.trap == TrapSpec::Harmonic && self.interaction.is_none()
    }

    pub fn is_harmonic_benchmark(&self) -> bool {
        self.uses_hermite()
    }
}
