use super::shaping::Shaper;
use super::SynthError;

/// Linear map from one sequence's white noise `w` (unit variance per sample)
/// to the optical part of a homodyne trace.
///
/// `A = S_c · Σ_r M_r H_r`, where `H_r` is circular filtering with the
/// amplitude response `sqrt(S_r(f))` of texture `r` (identity for vacuum),
/// `M_r` selects the samples of region `r` (regions partition the record), and
/// `S_c = I + (c - 1) g gᵀ` rescales the component along a unit-norm temporal
/// mode `g`. Because the map is linear and the input is white, all second
/// moments of the output follow from the adjoint: `E[(uᵀx)²] = ‖Aᵀu‖²`.
#[derive(Debug, Clone)]
pub struct SequenceOperator {
    n: usize,
    shaper: Shaper,
    textures: Vec<Option<Vec<f64>>>,
    regions: Vec<Region>,
    scaling: Option<ModeScaling>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub start: usize,
    pub end: usize,
    pub texture: usize,
}

#[derive(Debug, Clone)]
struct ModeScaling {
    start: usize,
    mode: Vec<f64>,
    factor: f64,
}

impl SequenceOperator {
    /// `textures` holds per-bin amplitude gains on bins `0..=n/2`; `None`
    /// marks the identity (shot noise). Regions must tile `0..n` in order;
    /// empty regions are dropped.
    pub fn new(n: usize, textures: Vec<Option<Vec<f64>>>, regions: Vec<Region>) -> Result<Self, SynthError> {
        if n == 0 {
            return Err(SynthError::Parameter("empty record".into()));
        }
        for t in textures.iter().flatten() {
            if t.len() != n / 2 + 1 {
                return Err(SynthError::Parameter(format!("texture has {} bins, expected {}", t.len(), n / 2 + 1)));
            }
            if t.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                return Err(SynthError::Parameter("texture gains must be finite and >= 0".into()));
            }
        }
        let regions: Vec<Region> = regions.into_iter().filter(|r| r.end > r.start).collect();
        let mut cursor = 0;
        for r in &regions {
            if r.start != cursor || r.texture >= textures.len() {
                return Err(SynthError::Parameter("regions must tile the record".into()));
            }
            cursor = r.end;
        }
        if cursor != n {
            return Err(SynthError::Parameter("regions must tile the record".into()));
        }
        Ok(Self { n, shaper: Shaper::new(n), textures, regions, scaling: None })
    }

    /// Single stationary texture over the whole record.
    pub fn stationary(n: usize, gains: Option<Vec<f64>>) -> Result<Self, SynthError> {
        Self::new(n, vec![gains], vec![Region { start: 0, end: n, texture: 0 }])
    }

    /// Adds the rank-one rescaling `I + (c - 1) g gᵀ` with `g` supported on
    /// `start..start + mode.len()`; `mode` is normalized here.
    pub fn with_mode_scaling(mut self, start: usize, mode: Vec<f64>, c: f64) -> Result<Self, SynthError> {
        if start + mode.len() > self.n {
            return Err(SynthError::Parameter("mode extends past the record".into()));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(SynthError::Parameter(format!("mode scale {c} must be finite and >= 0")));
        }
        let norm = mode.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(SynthError::Parameter("mode has zero norm".into()));
        }
        let mode = mode.iter().map(|v| v / norm).collect();
        self.scaling = if c == 1.0 { None } else { Some(ModeScaling { start, mode, factor: c - 1.0 }) };
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// The operator without its mode rescaling.
    pub fn background(&self) -> Self {
        Self { scaling: None, ..self.clone() }
    }

    fn scale_in_place(&self, x: &mut [f64]) {
        if let Some(s) = &self.scaling {
            let seg = &mut x[s.start..s.start + s.mode.len()];
            let proj: f64 = seg.iter().zip(&s.mode).map(|(a, b)| a * b).sum();
            let k = s.factor * proj;
            for (v, g) in seg.iter_mut().zip(&s.mode) {
                *v += k * g;
            }
        }
    }

    /// `A w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.n, "noise length must match the operator");
        let spectrum = if self.textures.iter().any(Option::is_some) { Some(self.shaper.forward(w)) } else { None };
        let shaped: Vec<Option<Vec<f64>>> = self
            .textures
            .iter()
            .map(|t| t.as_ref().map(|g| self.shaper.inverse_with_gains(spectrum.as_ref().expect("computed above"), g)))
            .collect();
        let mut x = vec![0.0; self.n];
        for r in &self.regions {
            let src: &[f64] = shaped[r.texture].as_deref().unwrap_or(w);
            x[r.start..r.end].copy_from_slice(&src[r.start..r.end]);
        }
        self.scale_in_place(&mut x);
        x
    }

    /// `Aᵀ v`.
    pub fn adjoint(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match the operator");
        let mut y = v.to_vec();
        self.scale_in_place(&mut y);
        let mut out = vec![0.0; self.n];
        for (t, gains) in self.textures.iter().enumerate() {
            let mut masked = vec![0.0; self.n];
            let mut any = false;
            for r in self.regions.iter().filter(|r| r.texture == t) {
                masked[r.start..r.end].copy_from_slice(&y[r.start..r.end]);
                any = true;
            }
            if !any {
                continue;
            }
            let contrib = match gains {
                Some(g) => self.shaper.filter(&masked, g),
                None => masked,
            };
            for (o, c) in out.iter_mut().zip(contrib) {
                *o += c;
            }
        }
        out
    }

    /// `E[(uᵀ A w)²]` for white `w`.
    pub fn expected_square(&self, u: &[f64]) -> f64 {
        self.adjoint(u).iter().map(|v| v * v).sum()
    }

    /// Expected per-sample variance averaged over the record.
    pub fn mean_sample_variance(&self) -> f64 {
        let n = self.n;
        let tex_var: Vec<f64> = self
            .textures
            .iter()
            .map(|t| match t {
                None => 1.0,
                Some(g) => (0..n).map(|k| g[k.min(n - k)].powi(2)).sum::<f64>() / n as f64,
            })
            .collect();
        let mut total: f64 = self.regions.iter().map(|r| (r.end - r.start) as f64 * tex_var[r.texture]).sum();
        if let Some(s) = &self.scaling {
            let mut g = vec![0.0; n];
            g[s.start..s.start + s.mode.len()].copy_from_slice(&s.mode);
            let c = 1.0 + s.factor;
            total += (c * c - 1.0) * self.background().expected_square(&g);
        }
        total / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(op: &SequenceOperator) -> Vec<Vec<f64>> {
        (0..op.len())
            .map(|j| {
                let mut e = vec![0.0; op.len()];
                e[j] = 1.0;
                op.apply(&e)
            })
            .collect()
    }

    #[test]
    fn adjoint_matches_dense_transpose() {
        let n = 24;
        let g1: Vec<f64> = (0..=n / 2).map(|k| 1.0 + 0.1 * k as f64).collect();
        let g2: Vec<f64> = (0..=n / 2).map(|k| 0.5 + 0.05 * (k as f64).sin()).collect();
        let op = SequenceOperator::new(
            n,
            vec![Some(g1), None, Some(g2)],
            vec![
                Region { start: 0, end: 7, texture: 0 },
                Region { start: 7, end: 15, texture: 1 },
                Region { start: 15, end: 24, texture: 2 },
            ],
        )
        .unwrap()
        .with_mode_scaling(10, (0..9).map(|i| (-(i as f64) / 3.0).exp()).collect(), 1.7)
        .unwrap();
        let cols = dense(&op);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let row = op.adjoint(&e);
            for j in 0..n {
                assert!((row[j] - cols[j][i]).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn identity_texture_passes_noise_exactly() {
        let op = SequenceOperator::stationary(16, None).unwrap();
        let w: Vec<f64> = (0..16).map(|i| i as f64 * 0.3 - 2.0).collect();
        assert_eq!(op.apply(&w), w);
    }

    #[test]
    fn regions_must_tile() {
        let r = vec![Region { start: 0, end: 5, texture: 0 }];
        assert!(SequenceOperator::new(8, vec![None], r).is_err());
    }
}
