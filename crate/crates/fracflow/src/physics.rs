//! Fluid property model: Corey relative permeabilities, fractional flow,
//! slightly compressible phase densities, and the Peaceman well index.

use crate::error::{FracflowError, Result};
use crate::units::BAR;

/// Two-phase (water/oil) fluid description. Defaults follow the common
/// waterflood parameter set used by the packaged cases.
#[derive(Debug, Clone)]
pub struct FluidModel {
    /// Water/oil viscosity, Pa·s.
    pub mu_w: f64,
    pub mu_o: f64,
    /// Phase compressibilities, 1/Pa.
    pub c_w: f64,
    pub c_o: f64,
    /// Reference densities at `p_ref`, kg/m³.
    pub rho_w_ref: f64,
    pub rho_o_ref: f64,
    pub p_ref: f64,
    /// Corey exponents.
    pub n_w: f64,
    pub n_o: f64,
    /// Endpoint relative permeabilities.
    pub krw_max: f64,
    pub kro_max: f64,
    /// Residual saturations.
    pub s_wr: f64,
    pub s_or: f64,
}

impl Default for FluidModel {
    fn default() -> Self {
        FluidModel {
            mu_w: 1e-3,
            mu_o: 5e-3,
            c_w: 1e-13,
            c_o: 1e-10,
            rho_w_ref: 1000.0,
            rho_o_ref: 800.0,
            p_ref: 100.0 * BAR,
            n_w: 2.0,
            n_o: 2.0,
            krw_max: 1.0,
            kro_max: 1.0,
            s_wr: 0.0,
            s_or: 0.0,
        }
    }
}

impl FluidModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_w > 0.0 && self.mu_o > 0.0) {
            return Err(FracflowError::config("fluid", "viscosities must be positive"));
        }
        if self.n_w < 1.0 || self.n_o < 1.0 {
            return Err(FracflowError::config("fluid", "Corey exponents must be >= 1"));
        }
        if !(self.krw_max > 0.0 && self.krw_max <= 1.0 && self.kro_max > 0.0 && self.kro_max <= 1.0) {
            return Err(FracflowError::config("fluid", "endpoint relperms must lie in (0, 1]"));
        }
        if self.s_wr < 0.0 || self.s_or < 0.0 || self.s_wr + self.s_or >= 1.0 {
            return Err(FracflowError::config("fluid", "residual saturations must satisfy 0 <= S_wr + S_or < 1"));
        }
        Ok(())
    }

    fn normalized(&self, s_w: f64) -> f64 {
        let s = s_w.clamp(0.0, 1.0);
        let span = 1.0 - self.s_wr - self.s_or;
        ((s - self.s_wr) / span).clamp(0.0, 1.0)
    }

    /// Corey relative permeabilities (k_rw, k_ro). Total function: the
    /// input is clamped to the physical range before normalization.
    pub fn relperm(&self, s_w: f64) -> (f64, f64) {
        let sn = self.normalized(s_w);
        (
            self.krw_max * sn.powf(self.n_w),
            self.kro_max * (1.0 - sn).powf(self.n_o),
        )
    }

    /// d(k_rw)/dS_w and d(k_ro)/dS_w. Zero outside the mobile range.
    pub fn relperm_deriv(&self, s_w: f64) -> (f64, f64) {
        let span = 1.0 - self.s_wr - self.s_or;
        let s = s_w.clamp(0.0, 1.0);
        let raw = (s - self.s_wr) / span;
        if !(0.0..=1.0).contains(&raw) {
            return (0.0, 0.0);
        }
        let sn = raw;
        let dsn = 1.0 / span;
        (
            self.krw_max * self.n_w * sn.powf(self.n_w - 1.0) * dsn,
            -self.kro_max * self.n_o * (1.0 - sn).powf(self.n_o - 1.0) * dsn,
        )
    }

    /// Phase mobilities (λ_w, λ_o) = k_rα / μ_α.
    pub fn mobilities(&self, s_w: f64) -> (f64, f64) {
        let (krw, kro) = self.relperm(s_w);
        (krw / self.mu_w, kro / self.mu_o)
    }

    pub fn total_mobility(&self, s_w: f64) -> f64 {
        let (lw, lo) = self.mobilities(s_w);
        lw + lo
    }

    /// Water fractional flow f_w = λ_w / (λ_w + λ_o) and its analytic
    /// derivative with respect to S_w.
    pub fn fractional_flow(&self, s_w: f64) -> (f64, f64) {
        let (lw, lo) = self.mobilities(s_w);
        let (dkrw, dkro) = self.relperm_deriv(s_w);
        let dlw = dkrw / self.mu_w;
        let dlo = dkro / self.mu_o;
        let lt = lw + lo;
        let fw = lw / lt;
        let dfw = (dlw * lo - lw * dlo) / (lt * lt);
        (fw, dfw)
    }

    /// ρ_α(p) = ρ_ref · exp(c_α (p − p_ref)).
    pub fn water_density(&self, p: f64) -> f64 {
        self.rho_w_ref * (self.c_w * (p - self.p_ref)).exp()
    }

    pub fn oil_density(&self, p: f64) -> f64 {
        self.rho_o_ref * (self.c_o * (p - self.p_ref)).exp()
    }
}

/// Peaceman well index for a vertical well through a cell of plan size
/// `dx × dy` and height `h`, with diagonal permeability `(kx, ky)`.
///
/// Uses the anisotropic equivalent radius; for kx = ky this reduces to
/// r_e = 0.14 sqrt(dx² + dy²).
pub fn peaceman_well_index(dx: f64, dy: f64, h: f64, kx: f64, ky: f64, r_w: f64) -> Result<f64> {
    let ratio = (ky / kx).sqrt();
    let r_e = 0.28 * (ratio * dx * dx + dy * dy / ratio).sqrt()
        / (ratio.sqrt() + 1.0 / ratio.sqrt());
    if r_e <= r_w {
        return Err(FracflowError::InvalidGeometry(format!(
            "equivalent radius {r_e:.4} m does not exceed well radius {r_w:.4} m"
        )));
    }
    let k_eff = (kx * ky).sqrt();
    Ok(2.0 * std::f64::consts::PI * k_eff * h / (r_e / r_w).ln())
}

/// Well kind: injectors add water, producers withdraw total fluid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellKind {
    Injector,
    Producer,
}

/// Operating control for a well.
#[derive(Debug, Clone, Copy)]
pub enum WellControl {
    /// Fixed reservoir-volume rate, m³/s (water for injectors).
    Rate(f64),
    /// Fixed bottom-hole pressure, Pa.
    Bhp(f64),
}

#[derive(Debug, Clone)]
pub struct Perforation {
    pub cell: usize,
    pub well_index: f64,
}

#[derive(Debug, Clone)]
pub struct WellSpec {
    pub name: String,
    pub kind: WellKind,
    pub control: WellControl,
    pub perforations: Vec<Perforation>,
}

impl WellSpec {
    pub fn validate(&self) -> Result<()> {
        if self.perforations.is_empty() {
            return Err(FracflowError::config(&self.name, "well has no perforations"));
        }
        if self.perforations.iter().any(|p| !(p.well_index > 0.0)) {
            return Err(FracflowError::config(&self.name, "well index must be positive"));
        }
        if let WellControl::Rate(q) = self.control {
            if q < 0.0 {
                return Err(FracflowError::config(&self.name, "rate must be non-negative"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corey_relperm_reference_values() {
        let fluid = FluidModel::default();
        let (krw, kro) = fluid.relperm(0.5);
        assert!((krw - 0.25).abs() < 1e-15);
        assert!((kro - 0.25).abs() < 1e-15);

        assert_eq!(fluid.relperm(0.0), (0.0, 1.0));

        let (krw, kro) = fluid.relperm(0.8);
        assert!((krw - 0.64).abs() < 1e-15);
        assert!((kro - 0.04).abs() < 1e-14);
    }

    #[test]
    fn relperm_clamps_out_of_range_input() {
        let fluid = FluidModel::default();
        assert_eq!(fluid.relperm(-0.3), (0.0, 1.0));
        assert_eq!(fluid.relperm(1.7), (1.0, 0.0));
    }

    #[test]
    fn fractional_flow_reference_values() {
        let fluid = FluidModel::default();
        let (fw, _) = fluid.fractional_flow(0.5);
        assert!((fw - 250.0 / 300.0).abs() < 1e-14);
        assert_eq!(fluid.fractional_flow(0.0).0, 0.0);
        assert_eq!(fluid.fractional_flow(1.0).0, 1.0);
    }

    #[test]
    fn fractional_flow_derivative_matches_finite_differences() {
        let fluid = FluidModel::default();
        let h = 1e-6;
        for i in 1..100 {
            let s = i as f64 / 100.0;
            if s - h < 0.0 || s + h > 1.0 {
                continue;
            }
            let (_, dfw) = fluid.fractional_flow(s);
            let fd = (fluid.fractional_flow(s + h).0 - fluid.fractional_flow(s - h).0) / (2.0 * h);
            let denom = dfw.abs().max(1e-12);
            assert!(
                (dfw - fd).abs() / denom < 1e-6,
                "s = {s}: analytic {dfw} vs fd {fd}"
            );
        }
    }

    #[test]
    fn monotonicity_of_relperm_and_fractional_flow() {
        let fluid = FluidModel::default();
        let mut prev = fluid.relperm(0.0);
        let mut prev_fw = 0.0;
        for i in 1..=200 {
            let s = i as f64 / 200.0;
            let (krw, kro) = fluid.relperm(s);
            assert!(krw >= prev.0);
            assert!(kro <= prev.1);
            let (fw, dfw) = fluid.fractional_flow(s);
            assert!(fw >= prev_fw);
            assert!(dfw >= -1e-15);
            prev = (krw, kro);
            prev_fw = fw;
        }
        assert!((prev_fw - 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_exponential_factors() {
        let fluid = FluidModel::default();
        let p0 = fluid.p_ref;
        // c_w = 1e-13 over 1e7 Pa: factor exp(1e-6)
        let factor = fluid.water_density(p0 + 1e7) / fluid.water_density(p0);
        assert!((factor - (1e-6f64).exp()).abs() < 1e-15);
        assert_eq!(fluid.water_density(p0), fluid.rho_w_ref);

        let incompressible = FluidModel { c_w: 0.0, ..FluidModel::default() };
        assert_eq!(incompressible.water_density(p0 + 5e7), incompressible.rho_w_ref);
    }

    #[test]
    fn peaceman_reference_value() {
        // 10 m square cell, k = 1e-14 m², h = 1 m, r_w = 0.1 m
        let wi = peaceman_well_index(10.0, 10.0, 1.0, 1e-14, 1e-14, 0.1).unwrap();
        let r_e = 0.14 * (200.0f64).sqrt();
        assert!((r_e - 1.9799).abs() < 1e-4);
        let expected = 2.0 * std::f64::consts::PI * 1e-14 / (r_e / 0.1).ln();
        assert!((wi - expected).abs() / expected < 1e-12);
        assert!((wi - 2.103e-14).abs() / 2.103e-14 < 1e-3);
    }

    #[test]
    fn peaceman_linear_in_permeability() {
        let wi1 = peaceman_well_index(10.0, 10.0, 1.0, 1e-14, 1e-14, 0.1).unwrap();
        let wi2 = peaceman_well_index(10.0, 10.0, 1.0, 2e-14, 2e-14, 0.1).unwrap();
        assert!((wi2 - 2.0 * wi1).abs() / wi2 < 1e-12);
    }

    #[test]
    fn peaceman_rejects_small_cells() {
        assert!(peaceman_well_index(0.5, 0.5, 1.0, 1e-14, 1e-14, 0.2).is_err());
    }
}
