//! Strictly increasing piecewise-linear maps.
//!
//! The map is stored through unconstrained parameters: an anchor (the
//! ordinate at the first knot) and the logarithms of the ordinate gaps
//! between consecutive knots. Any finite parameter vector therefore yields
//! an invertible map, which lets the optimizer move freely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear, strictly increasing map with linear extrapolation past
/// the outer knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnotTable", into = "KnotTable")]
pub struct MonotoneMap {
    knots_x: Vec<f64>,
    log_increments: Vec<f64>,
    anchor: f64,
}

/// Serialized form: explicit knot abscissae and ordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnotTable {
    pub knots_x: Vec<f64>,
    pub knots_y: Vec<f64>,
}

impl TryFrom<KnotTable> for MonotoneMap {
    type Error = Error;

    fn try_from(t: KnotTable) -> Result<Self> {
        MonotoneMap::from_knots(t.knots_x, &t.knots_y)
    }
}

impl From<MonotoneMap> for KnotTable {
    fn from(m: MonotoneMap) -> Self {
        KnotTable {
            knots_y: m.knots_y(),
            knots_x: m.knots_x,
        }
    }
}

fn check_abscissae(knots_x: &[f64]) -> Result<()> {
    if knots_x.len() < 2 {
        return Err(Error::Config("a monotone map needs at least two knots".into()));
    }
    if knots_x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("knot abscissae must be finite".into()));
    }
    if knots_x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateInput(
            "knot abscissae are not strictly increasing".into(),
        ));
    }
    Ok(())
}

impl MonotoneMap {
    pub fn new(knots_x: Vec<f64>, log_increments: Vec<f64>, anchor: f64) -> Result<Self> {
        check_abscissae(&knots_x)?;
        if log_increments.len() + 1 != knots_x.len() {
            return Err(Error::Config(format!(
                "{} knots need {} increments, got {}",
                knots_x.len(),
                knots_x.len() - 1,
                log_increments.len()
            )));
        }
        if !anchor.is_finite() || log_increments.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("monotone map parameters must be finite".into()));
        }
        Ok(Self {
            knots_x,
            log_increments,
            anchor,
        })
    }

    /// Builds the map through explicit ordinates, which must strictly increase.
    pub fn from_knots(knots_x: Vec<f64>, knots_y: &[f64]) -> Result<Self> {
        check_abscissae(&knots_x)?;
        if knots_y.len() != knots_x.len() {
            return Err(Error::Mismatch(format!(
                "{} abscissae but {} ordinates",
                knots_x.len(),
                knots_y.len()
            )));
        }
        if knots_y.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("knot ordinates must strictly increase".into()));
        }
        let log_increments = knots_y.windows(2).map(|w| (w[1] - w[0]).ln()).collect();
        Self::new(knots_x, log_increments, knots_y[0])
    }

    /// Unit-slope map through the given abscissae.
    pub fn identity_on(knots_x: Vec<f64>) -> Result<Self> {
        let y = knots_x.clone();
        Self::from_knots(knots_x, &y)
    }

    pub fn knots_x(&self) -> &[f64] {
        &self.knots_x
    }

    pub fn log_increments(&self) -> &[f64] {
        &self.log_increments
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn n_knots(&self) -> usize {
        self.knots_x.len()
    }

    pub fn knots_y(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.knots_x.len());
        let mut acc = self.anchor;
        y.push(acc);
        for li in &self.log_increments {
            acc += li.exp();
            y.push(acc);
        }
        y
    }

    /// Segment slopes; the first and last also serve the extrapolated tails.
    pub fn slopes(&self) -> Vec<f64> {
        self.log_increments
            .iter()
            .zip(self.knots_x.windows(2))
            .map(|(li, w)| li.exp() / (w[1] - w[0]))
            .collect()
    }

    /// Index of the segment whose formula applies at `x`.
    #[inline]
    pub fn segment(&self, x: f64) -> usize {
        let k = self.knots_x.partition_point(|&kx| kx <= x);
        k.saturating_sub(1).min(self.knots_x.len() - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ky = self.knots_y();
        let slopes = self.slopes();
        let i = self.segment(x);
        ky[i] + slopes[i] * (x - self.knots_x[i])
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.slopes()[self.segment(x)]
    }

    /// Evaluates the map over many samples without recomputing the knot table.
    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        let ky = self.knots_y();
        let slopes = self.slopes();
        xs.iter()
            .map(|&x| {
                let i = self.segment(x);
                ky[i] + slopes[i] * (x - self.knots_x[i])
            })
            .collect()
    }

    /// Affine reparameterization `a * g + b` with `a > 0`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Config(format!("affine scale {a} must be positive")));
        }
        let shift = a.ln();
        Self::new(
            self.knots_x.clone(),
            self.log_increments.iter().map(|li| li + shift).collect(),
            a * self.anchor + b,
        )
    }

    /// Inverse map, itself monotone piecewise-linear.
    pub fn inverse(&self) -> Result<Self> {
        let ky = self.knots_y();
        Self::from_knots(ky, &self.knots_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_has_unit_slope_and_extrapolates() {
        let g = MonotoneMap::identity_on(vec![-1.0, 0.0, 2.0]).unwrap();
        for x in [-5.0, -1.0, -0.3, 0.0, 1.5, 2.0, 9.0] {
            assert!((g.eval(x) - x).abs() < 1e-12);
            assert!((g.derivative(x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn knot_table_roundtrip_and_validation() {
        let g = MonotoneMap::from_knots(vec![0.0, 1.0, 3.0], &[1.0, 2.0, 10.0]).unwrap();
        let sl = g.slopes();
        assert!((sl[0] - 1.0).abs() < 1e-12 && (sl[1] - 4.0).abs() < 1e-12);
        let json = serde_json::to_string(&g).unwrap();
        let back: MonotoneMap = serde_json::from_str(&json).unwrap();
        for (a, b) in back.knots_y().iter().zip(g.knots_y()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(MonotoneMap::from_knots(vec![0.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(MonotoneMap::from_knots(vec![0.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(serde_json::from_str::<MonotoneMap>(r#"{"knots_x":[0,1],"knots_y":[2,1]}"#).is_err());
    }

    proptest! {
        #[test]
        fn any_parameters_give_increasing_map(
            incs in prop::collection::vec(-4.0..4.0f64, 1..12),
            anchor in -10.0..10.0f64,
            probes in prop::collection::vec(-20.0..20.0f64, 2..40),
        ) {
            let kx: Vec<f64> = (0..=incs.len()).map(|i| i as f64 * 0.7 - 3.0).collect();
            let g = MonotoneMap::new(kx, incs, anchor).unwrap();
            prop_assert!(g.slopes().iter().all(|s| *s > 0.0 && s.is_finite()));
            let mut p = probes.clone();
            p.sort_by(f64::total_cmp);
            let v = g.eval_many(&p);
            for w in p.windows(2).zip(v.windows(2)) {
                if w.0[1] > w.0[0] {
                    prop_assert!(w.1[1] > w.1[0]);
                }
            }
            let inv = g.inverse().unwrap();
            for &x in &p {
                prop_assert!((inv.eval(g.eval(x)) - x).abs() < 1e-8 * (1.0 + x.abs()));
            }
        }
    }
}
