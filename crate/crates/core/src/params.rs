//! Model parameters and the closed-form quantities derived from them.
//!
//! A column of badness `ℓ` is elongated to width `S(ℓ) = ⌈q^{-ℓ(1-σ)}⌉`.
//! Badness labels are geometric with `P(N ≥ ℓ+1) = q^ℓ`, i.e. support
//! `ℓ ≥ 1` and `P(N = ℓ) = (1-q) q^{ℓ-1}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default truncation tolerance for the layer-width series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Widths at or above this value are treated as overflowing the integer range.
pub const WIDTH_LIMIT: f64 = (1u64 << 62) as f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{field} = {value} is out of range ({expected})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("q < p violated: q = {q} >= p = {p}")]
    QNotBelowP { p: f64, q: f64 },
    #[error("q^sigma > p violated: q^sigma = {q_sigma} <= p = {p}")]
    SigmaTooLarge { q_sigma: f64, p: f64 },
    #[error("dimension d = {0} is not supported (only d = 2)")]
    UnsupportedDimension(u32),
    #[error("layer width for badness {badness} exceeds the integer range")]
    WidthOverflow { badness: u32 },
}

fn default_dimension() -> u32 {
    2
}

/// The parameter tuple `(p, q, σ, L, d)`.
///
/// Deserializes from a JSON object with exactly the keys `p`, `q`, `sigma`,
/// `L` and an optional `d` (default 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Base open-edge probability.
    pub p: f64,
    /// Tail parameter of the badness labels.
    pub q: f64,
    /// Elongation exponent.
    pub sigma: f64,
    /// Filling cutoff: rectangles spanned by layers of badness `<= L` are opened.
    #[serde(rename = "L")]
    pub fill_cutoff: u32,
    #[serde(default = "default_dimension")]
    pub d: u32,
}

/// How strictly [`ModelParams::validate_with`] enforces the standing assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    /// Require `0 < q < p < 1` and `q^σ > p`.
    #[default]
    Strict,
    /// Allow `q >= p`. Such lattices are not expected to percolate but the
    /// conductivity machinery is still well defined; `q^σ > p` is still required.
    AllowQAboveP,
}

/// Weighting used for the plain badness law in series evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmfConvention {
    /// `P(N = ℓ) = (1-q) q^{ℓ-1}`, `ℓ ≥ 1`; a proper probability law.
    #[default]
    Geometric,
    /// Weight `(1-q) q^ℓ`, `ℓ ≥ 1`; sums to `q`. Kept for sensitivity checks.
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// `[(1-σ) + ln p / ln q]^{-1/2}`, always in `(0, 1)`.
    pub gamma: f64,
    /// `E[S(N₁)]` under [`PmfConvention::Geometric`].
    pub mean_layer_width: f64,
    pub q_sigma: f64,
    /// `ln(1/q)`, cached for the badness threshold.
    pub log_inv_q: f64,
    /// Always set: the percolation threshold `q_c` is not checked.
    pub percolation_unverified: bool,
}

impl DerivedConstants {
    /// Badness threshold `ℓ_n = γ ln n / ln(1/q)` for a window of size `n`.
    ///
    /// Kept real-valued; integer badness labels are compared with `>=`.
    pub fn threshold_badness(&self, n: u64) -> f64 {
        if n <= 1 {
            return 0.0;
        }
        self.gamma * (n as f64).ln() / self.log_inv_q
    }

    /// Decay exponent `1 - 1/γ` of the test-function bound.
    pub fn bound_exponent(&self) -> f64 {
        1.0 - 1.0 / self.gamma
    }

    /// Upper bound `2 n^{1-1/γ}` on the test-function energy (per-edge convention).
    pub fn test_energy_bound(&self, n: u64) -> f64 {
        2.0 * (n as f64).powf(self.bound_exponent())
    }
}

impl ModelParams {
    pub fn new(p: f64, q: f64, sigma: f64, fill_cutoff: u32) -> Self {
        Self {
            p,
            q,
            sigma,
            fill_cutoff,
            d: 2,
        }
    }

    /// Moderate reference set `p = 0.65, q = 0.3, σ = 0.25, L = 2`.
    pub fn moderate() -> Self {
        Self::new(0.65, 0.3, 0.25, 2)
    }

    pub fn with_fill_cutoff(mut self, fill_cutoff: u32) -> Self {
        self.fill_cutoff = fill_cutoff;
        self
    }

    pub fn validate(&self) -> Result<DerivedConstants, ParamsError> {
        self.validate_with(Validation::Strict)
    }

    pub fn validate_with(&self, mode: Validation) -> Result<DerivedConstants, ParamsError> {
        for (field, value) in [("p", self.p), ("q", self.q), ("sigma", self.sigma)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(ParamsError::OutOfRange {
                    field,
                    value,
                    expected: "open interval (0, 1)",
                });
            }
        }
        if self.d != 2 {
            return Err(ParamsError::UnsupportedDimension(self.d));
        }
        if mode == Validation::Strict && self.q >= self.p {
            return Err(ParamsError::QNotBelowP {
                p: self.p,
                q: self.q,
            });
        }
        let q_sigma = self.q.powf(self.sigma);
        if q_sigma <= self.p {
            return Err(ParamsError::SigmaTooLarge { q_sigma, p: self.p });
        }
        let gamma = ((1.0 - self.sigma) + self.p.ln() / self.q.ln()).powf(-0.5);
        Ok(DerivedConstants {
            gamma,
            mean_layer_width: self.mean_layer_width(DEFAULT_SERIES_TOL),
            q_sigma,
            log_inv_q: -self.q.ln(),
            percolation_unverified: true,
        })
    }

    /// Real width `q^{-ℓ(1-σ)}` before rounding up.
    pub fn raw_width(&self, badness: f64) -> f64 {
        (-badness * (1.0 - self.sigma) * self.q.ln()).exp()
    }

    /// `S(ℓ) = ⌈q^{-ℓ(1-σ)}⌉` as a real number; also accepts real `ℓ`.
    pub fn layer_width_real(&self, badness: f64) -> f64 {
        self.raw_width(badness).ceil()
    }

    /// `S(ℓ) = ⌈q^{-ℓ(1-σ)}⌉`.
    pub fn layer_width(&self, badness: u32) -> Result<u64, ParamsError> {
        let w = self.layer_width_real(badness as f64);
        if !w.is_finite() || w >= WIDTH_LIMIT {
            return Err(ParamsError::WidthOverflow { badness });
        }
        Ok(w as u64)
    }

    /// Plain badness law `P(N = ℓ)` (zero for `ℓ = 0`).
    pub fn plain_pmf(&self, badness: u32) -> f64 {
        self.plain_weight(badness, PmfConvention::Geometric)
    }

    pub fn plain_weight(&self, badness: u32, convention: PmfConvention) -> f64 {
        if badness == 0 {
            return 0.0;
        }
        let exponent = match convention {
            PmfConvention::Geometric => badness - 1,
            PmfConvention::Shifted => badness,
        };
        (1.0 - self.q) * self.q.powi(exponent as i32)
    }

    /// Bound on `Σ_{ℓ > ℓ_max} P(N = ℓ) S(ℓ)` under the given convention,
    /// using `S(ℓ) ≤ q^{-ℓ(1-σ)} + 1`.
    pub fn width_series_tail(&self, last: u32, convention: PmfConvention) -> f64 {
        let q = self.q;
        let q_sigma = q.powf(self.sigma);
        let shift = match convention {
            PmfConvention::Geometric => 1.0 / q,
            PmfConvention::Shifted => 1.0,
        };
        let next = (last + 1) as f64;
        (1.0 - q) * shift * q_sigma.powf(next) / (1.0 - q_sigma) + shift * q.powf(next)
    }

    /// `E[S(N₁)]` under [`PmfConvention::Geometric`].
    pub fn mean_layer_width(&self, tol: f64) -> f64 {
        self.mean_layer_width_with(PmfConvention::Geometric, tol)
    }

    /// Series `Σ_ℓ w(ℓ) S(ℓ)` truncated once the certified tail is below `tol`.
    pub fn mean_layer_width_with(&self, convention: PmfConvention, tol: f64) -> f64 {
        let mut sum = 0.0;
        let mut badness = 1u32;
        loop {
            sum += self.plain_weight(badness, convention) * self.layer_width_real(badness as f64);
            if self.width_series_tail(badness, convention) < tol {
                return sum;
            }
            badness += 1;
        }
    }

    /// Analytic upper bound on [`Self::mean_layer_width_with`].
    pub fn mean_layer_width_bound(&self, convention: PmfConvention) -> f64 {
        let q_sigma = self.q.powf(self.sigma);
        match convention {
            PmfConvention::Geometric => {
                1.0 + (1.0 - self.q) * self.q.powf(self.sigma - 1.0) / (1.0 - q_sigma)
            }
            PmfConvention::Shifted => 1.0 + (1.0 - self.q) / (1.0 - q_sigma),
        }
    }

    /// Size-biased law of the layer covering a fixed site:
    /// `P(N'₀ = ℓ) = S(ℓ) P(N₁ = ℓ) / E[S(N₁)]`.
    pub fn size_biased_pmf(&self, badness: u32) -> f64 {
        self.size_biased_pmf_given_mean(badness, self.mean_layer_width(DEFAULT_SERIES_TOL))
    }

    pub fn size_biased_pmf_given_mean(&self, badness: u32, mean_width: f64) -> f64 {
        self.layer_width_real(badness as f64) * self.plain_pmf(badness) / mean_width
    }
}

/// Size-biases the law `pmf` by `width` over badness `1..=last`, normalized on
/// that range.
pub fn size_bias(pmf: impl Fn(u32) -> f64, width: impl Fn(u32) -> f64, last: u32) -> Vec<f64> {
    let weights: Vec<f64> = (1..=last).map(|l| pmf(l) * width(l)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moderate_parameters_validate() {
        let d = ModelParams::moderate().validate().unwrap();
        assert!((d.gamma - 0.950_099_488_011).abs() < 1e-10, "{}", d.gamma);
        assert!(d.percolation_unverified);
    }

    #[test]
    fn rejects_q_not_below_p() {
        let err = ModelParams::new(0.65, 0.7, 0.25, 2).validate().unwrap_err();
        assert!(matches!(err, ParamsError::QNotBelowP { .. }));
        assert!(err.to_string().contains("q < p"));
    }

    #[test]
    fn relaxed_mode_accepts_q_above_p() {
        let params = ModelParams::new(0.55, 0.9, 0.1, 0);
        assert!(params.validate().is_err());
        let d = params.validate_with(Validation::AllowQAboveP).unwrap();
        assert!((d.gamma - 0.390_012_413_56).abs() < 1e-9);
        assert!((d.bound_exponent() + 1.564_020_952).abs() < 1e-8);
    }

    #[test]
    fn rejects_sigma_too_large() {
        // 0.3^0.5 ~ 0.548 < 0.65
        let err = ModelParams::new(0.65, 0.3, 0.5, 2).validate().unwrap_err();
        assert!(matches!(err, ParamsError::SigmaTooLarge { .. }));
    }

    #[test]
    fn rejects_out_of_range_fields() {
        for params in [
            ModelParams::new(1.0, 0.3, 0.25, 0),
            ModelParams::new(0.65, 0.0, 0.25, 0),
            ModelParams::new(0.65, 0.3, 1.0, 0),
            ModelParams::new(f64::NAN, 0.3, 0.25, 0),
        ] {
            assert!(matches!(
                params.validate(),
                Err(ParamsError::OutOfRange { .. })
            ));
        }
        let mut params = ModelParams::moderate();
        params.d = 3;
        assert_eq!(params.validate(), Err(ParamsError::UnsupportedDimension(3)));
    }

    #[test]
    fn layer_widths() {
        let params = ModelParams::moderate();
        assert_eq!(params.layer_width(0).unwrap(), 1);
        assert_eq!(params.layer_width(1).unwrap(), 3);
        assert_eq!(params.layer_width(2).unwrap(), 7);
        assert_eq!(params.layer_width(3).unwrap(), 16);
        assert!(matches!(
            params.layer_width(200),
            Err(ParamsError::WidthOverflow { badness: 200 })
        ));
    }

    #[test]
    fn threshold_badness_values() {
        let d = ModelParams::moderate().validate().unwrap();
        assert_eq!(d.threshold_badness(1), 0.0);
        let l100 = d.threshold_badness(100);
        assert!((l100 - 3.634_110_189_36).abs() < 1e-9, "{l100}");
        assert!((d.threshold_badness(10_000) - 2.0 * l100).abs() < 1e-12);
    }

    #[test]
    fn mean_width_and_size_bias() {
        let params = ModelParams::moderate();
        let mean = params.mean_layer_width(DEFAULT_SERIES_TOL);
        // Reference computed with 30-digit arithmetic over 400 terms.
        assert!((mean - 7.294_552_771_957_43).abs() < 1e-10, "{mean}");
        let series = params.mean_layer_width_with(PmfConvention::Shifted, 1e-12);
        assert!((series - 2.188_365_831_587_23).abs() < 1e-10, "{series}");
        assert!((params.size_biased_pmf(1) - 0.287_886_052_188_568).abs() < 1e-10);
        assert!((params.size_biased_pmf(2) - 0.201_520_236_531_998).abs() < 1e-10);
        assert!((params.size_biased_pmf(3) - 0.138_185_305_050_513).abs() < 1e-10);
    }

    #[test]
    fn small_q_mean_width_tends_to_one() {
        for q in [1e-3, 1e-4, 1e-5] {
            let params = ModelParams::new(0.5, q, 0.9, 0);
            let mean = params.mean_layer_width(DEFAULT_SERIES_TOL);
            // S(1) = ⌈q^{-0.1}⌉ stays a small integer; the mass sits on ℓ = 1.
            let s1 = params.layer_width_real(1.0);
            assert!((mean - s1).abs() < 10.0 * q * s1, "q={q} mean={mean} s1={s1}");
        }
        let params = ModelParams::new(0.5, 1e-12, 0.99, 0);
        assert!((params.mean_layer_width(1e-14) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn deserialize_rejects_unknown_keys() {
        let ok: ModelParams =
            serde_json::from_str(r#"{"p":0.65,"q":0.3,"sigma":0.25,"L":2}"#).unwrap();
        assert_eq!(ok, ModelParams::moderate());
        assert!(serde_json::from_str::<ModelParams>(
            r#"{"p":0.65,"q":0.3,"sigma":0.25,"L":2,"extra":1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<ModelParams>(
            r#"{"p":0.65,"q":0.3,"sigma":0.25,"L":2.5}"#
        )
        .is_err());
    }
}
