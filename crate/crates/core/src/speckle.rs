//! Multimode-fiber speckle model: a static random transfer matrix, an SLM
//! phase mask optimized to focus on one output mode, and the single- and
//! two-photon detection maps of the resulting intensity.
//!
//! Output mode m is one detector pixel. The Fourier basis is the unitary
//! DFT over output modes, with the same sign convention as
//! [`QuditSymbol::amplitudes`](crate::params::QuditSymbol::amplitudes).

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::params::Basis;
use crate::rng::RandomSource;

/// S×M complex matrix t[n][m], row-major by input segment.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    segments: usize,
    modes: usize,
    entries: Vec<Complex64>,
    origin: Option<RandomSource>,
}

impl TransferMatrix {
    pub fn from_entries(segments: usize, modes: usize, entries: Vec<Complex64>) -> Result<Self> {
        if segments == 0 || modes == 0 {
            return Err(Error::out_of_range(
                "segments",
                "need at least one segment and one mode",
            ));
        }
        if entries.len() != segments * modes {
            return Err(Error::LengthMismatch {
                expected: segments * modes,
                found: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::out_of_range("entries", "must be finite"));
        }
        Ok(TransferMatrix {
            segments,
            modes,
            entries,
            origin: None,
        })
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[n * self.modes + m]
    }

    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.entries[n * self.modes..(n + 1) * self.modes]
    }

    /// Random source the matrix was generated from, if any.
    pub fn origin(&self) -> Option<RandomSource> {
        self.origin
    }
}

/// I.i.d. circular Gaussian entries with E|t|² = 1/S.
pub fn generate_fiber(segments: usize, modes: usize, source: RandomSource) -> Result<TransferMatrix> {
    if segments == 0 || modes == 0 {
        return Err(Error::out_of_range(
            "segments",
            "need at least one segment and one mode",
        ));
    }
    let mut rng = source.rng();
    let normal = Normal::new(0.0, (0.5 / segments as f64).sqrt())
        .map_err(|e| Error::out_of_range("segments", e.to_string()))?;
    let entries = (0..segments * modes)
        .map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    Ok(TransferMatrix {
        segments,
        modes,
        entries,
        origin: Some(source),
    })
}

/// Unit-modulus phase factor σ_n for every SLM segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SlmMask {
    sigma: Vec<Complex64>,
}

impl SlmMask {
    /// All segments at phase 0.
    pub fn flat(segments: usize) -> Self {
        SlmMask {
            sigma: vec![Complex64::new(1.0, 0.0); segments],
        }
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        SlmMask {
            sigma: phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(segments: usize, rng: &mut R) -> Self {
        let phases: Vec<f64> = (0..segments).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        SlmMask::from_phases(&phases)
    }

    pub fn sigma(&self) -> &[Complex64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Output field E_m, in the computational or Fourier basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldAmplitude {
    pub basis: Basis,
    pub values: Vec<Complex64>,
}

impl FieldAmplitude {
    pub fn total_intensity(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The same field expressed in `basis`.
    pub fn in_basis(&self, basis: Basis) -> FieldAmplitude {
        if basis == self.basis {
            return self.clone();
        }
        let m = self.values.len();
        let mut buf = self.values.clone();
        let mut planner = FftPlanner::new();
        match basis {
            Basis::Fourier => planner.plan_fft_forward(m).process(&mut buf),
            Basis::Computational => planner.plan_fft_inverse(m).process(&mut buf),
        }
        let scale = 1.0 / (m as f64).sqrt();
        buf.iter_mut().for_each(|z| *z *= scale);
        FieldAmplitude { basis, values: buf }
    }
}

/// E_m = Σ_n t_nm σ_n with unit input amplitudes.
pub fn output_field(tm: &TransferMatrix, mask: &SlmMask) -> Result<FieldAmplitude> {
    if mask.len() != tm.segments {
        return Err(Error::LengthMismatch {
            expected: tm.segments,
            found: mask.len(),
        });
    }
    let mut values = vec![Complex64::new(0.0, 0.0); tm.modes];
    for (n, s) in mask.sigma.iter().enumerate() {
        for (e, t) in values.iter_mut().zip(tm.row(n)) {
            *e += t * s;
        }
    }
    Ok(FieldAmplitude {
        basis: Basis::Computational,
        values,
    })
}

/// Normalized probability per detector pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    probabilities: Vec<f64>,
    cols: usize,
}

impl IntensityMap {
    pub fn from_field(field: &FieldAmplitude) -> Result<Self> {
        let total = field.total_intensity();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::DegenerateDenominator("total intensity"));
        }
        let probabilities = field.values.iter().map(|z| z.norm_sqr() / total).collect();
        Ok(IntensityMap::with_grid(probabilities))
    }

    /// Normalizes `weights` and lays them out on the squarest grid that fits.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::out_of_range("weights", "must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::DegenerateDenominator("total intensity"));
        }
        Ok(IntensityMap::with_grid(
            weights.into_iter().map(|w| w / total).collect(),
        ))
    }

    fn with_grid(probabilities: Vec<f64>) -> Self {
        let (_, cols) = grid_shape(probabilities.len());
        IntensityMap { probabilities, cols }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// (index, mass) of the brightest pixel.
    pub fn peak(&self) -> (usize, f64) {
        self.probabilities
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (i, p)| if p > best.1 { (i, p) } else { best },
            )
    }

    /// Σ p_m²: probability that two independent photons share a pixel.
    pub fn coincidence(&self) -> f64 {
        self.probabilities.iter().map(|p| p * p).sum()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.probabilities.len() / self.cols, self.cols)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_grid(out, &self.probabilities, self.shape())
    }
}

/// Rows × cols with rows ≥ cols, as square as the pixel count allows
/// (289 → 17×17, 36 → 6×6, primes → n×1).
pub fn grid_shape(pixels: usize) -> (usize, usize) {
    let mut cols = (pixels as f64).sqrt() as usize;
    while cols > 1 && pixels % cols != 0 {
        cols -= 1;
    }
    let cols = cols.max(1);
    (pixels / cols, cols)
}

/// Row-major grid preceded by a `# rows=R,cols=C` line.
pub fn write_grid<W: Write>(mut out: W, values: &[f64], (rows, cols): (usize, usize)) -> std::io::Result<()> {
    writeln!(out, "# rows={rows},cols={cols}")?;
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Test phases per segment, evenly spaced on [0, 2π).
    pub phases: usize,
    /// Full passes over all segments.
    pub sweeps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            phases: 16,
            sweeps: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocusResult {
    pub mask: SlmMask,
    /// Focused target intensity over its mean under random masks.
    pub enhancement: f64,
    /// Target intensity after each sweep, starting with the flat mask.
    pub history: Vec<f64>,
}

/// Per-segment contribution g_n to the target amplitude in `basis`, so
/// that the target amplitude is Σ_n g_n σ_n.
fn target_couplings(tm: &TransferMatrix, target: usize, basis: Basis) -> Vec<Complex64> {
    match basis {
        Basis::Computational => (0..tm.segments).map(|n| tm.get(n, target)).collect(),
        Basis::Fourier => {
            let m = tm.modes as f64;
            let kernel: Vec<Complex64> = (0..tm.modes)
                .map(|k| {
                    let angle = -2.0 * PI * ((k * target) % tm.modes) as f64 / m;
                    Complex64::from_polar(1.0 / m.sqrt(), angle)
                })
                .collect();
            (0..tm.segments)
                .map(|n| tm.row(n).iter().zip(&kernel).map(|(t, k)| t * k).sum())
                .collect()
        }
    }
}

/// Sequential coordinate ascent over segment phases, maximizing the
/// intensity of `target` measured in `basis`. A phase only changes on a
/// strict improvement, so the objective never decreases.
pub fn optimize_focus(
    tm: &TransferMatrix,
    target: usize,
    basis: Basis,
    config: OptimizerConfig,
) -> Result<FocusResult> {
    if target >= tm.modes {
        return Err(Error::out_of_range(
            "target",
            format!("mode {target} of {}", tm.modes),
        ));
    }
    if config.phases == 0 {
        return Err(Error::out_of_range("phases", "need at least one test phase"));
    }
    let g = target_couplings(tm, target, basis);
    let grid: Vec<Complex64> = (0..config.phases)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / config.phases as f64))
        .collect();
    let mut choice = vec![0usize; tm.segments];
    let mut total: Complex64 = g.iter().sum();
    let mut history = vec![total.norm_sqr()];

    for _ in 0..config.sweeps {
        for n in 0..tm.segments {
            let rest = total - g[n] * grid[choice[n]];
            let mut best = (choice[n], total.norm_sqr());
            for (k, s) in grid.iter().enumerate() {
                let value = (rest + g[n] * s).norm_sqr();
                if value > best.1 {
                    best = (k, value);
                }
            }
            choice[n] = best.0;
            total = rest + g[n] * grid[best.0];
        }
        history.push(total.norm_sqr());
    }

    let mean: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    let enhancement = if mean > 0.0 { total.norm_sqr() / mean } else { 1.0 };
    Ok(FocusResult {
        mask: SlmMask {
            sigma: choice.iter().map(|&k| grid[k]).collect(),
        },
        enhancement,
        history,
    })
}

/// Target intensity of every mask on a `phases`-point grid, keeping the
/// best. Exponential in S; for cross-checking the optimizer.
pub fn exhaustive_focus(tm: &TransferMatrix, target: usize, basis: Basis, phases: usize) -> f64 {
    let g = target_couplings(tm, target, basis);
    let grid: Vec<Complex64> = (0..phases)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / phases as f64))
        .collect();
    let mut best = 0.0f64;
    let mut digits = vec![0usize; tm.segments];
    loop {
        let sum: Complex64 = g.iter().zip(&digits).map(|(gn, &k)| gn * grid[k]).sum();
        best = best.max(sum.norm_sqr());
        let mut i = 0;
        loop {
            if i == digits.len() {
                return best;
            }
            digits[i] += 1;
            if digits[i] < phases {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Intensity of the output field read out in `measurement_basis`.
///
/// A mask focused in one basis gives a localized map when read in that
/// basis and a delocalized one in the other.
pub fn measure_intensity(
    tm: &TransferMatrix,
    mask: &SlmMask,
    measurement_basis: Basis,
) -> Result<IntensityMap> {
    let field = output_field(tm, mask)?.in_basis(measurement_basis);
    IntensityMap::from_field(&field)
}

/// The map seen when the mask was focused in `prepared_basis` and read out
/// in the other basis; usable as a channel delocalization distribution.
pub fn delocalized_distribution(
    tm: &TransferMatrix,
    mask: &SlmMask,
    prepared_basis: Basis,
) -> Result<IntensityMap> {
    measure_intensity(tm, mask, prepared_basis.other())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMaps {
    /// Fraction of all photons landing on each pixel.
    pub pd: Vec<f64>,
    /// Fraction of pairs with both photons on each pixel.
    pub pd2: Vec<f64>,
    pub pairs: u64,
    cols: usize,
}

impl DetectionMaps {
    /// Fraction of pairs that hit the same pixel.
    pub fn same_pixel_fraction(&self) -> f64 {
        self.pd2.iter().sum()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.pd.len() / self.cols, self.cols)
    }

    pub fn write_pd_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_grid(out, &self.pd, self.shape())
    }

    pub fn write_pd2_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_grid(out, &self.pd2, self.shape())
    }
}

/// Sends `pairs` pairs of independent photons through `imap`.
pub fn sample_pd_pd2<R: Rng + ?Sized>(imap: &IntensityMap, pairs: u64, rng: &mut R) -> Result<DetectionMaps> {
    if pairs == 0 {
        return Err(Error::out_of_range("pairs", "need at least one photon pair"));
    }
    let dist = WeightedIndex::new(imap.probabilities())
        .map_err(|e| Error::out_of_range("intensity", e.to_string()))?;
    let m = imap.len();
    let mut singles = vec![0u64; m];
    let mut doubles = vec![0u64; m];
    for _ in 0..pairs {
        let a = dist.sample(rng);
        let b = dist.sample(rng);
        singles[a] += 1;
        singles[b] += 1;
        if a == b {
            doubles[a] += 1;
        }
    }
    let n = pairs as f64;
    Ok(DetectionMaps {
        pd: singles.iter().map(|&c| c as f64 / (2.0 * n)).collect(),
        pd2: doubles.iter().map(|&c| c as f64 / n).collect(),
        pairs,
        cols: imap.cols,
    })
}

const FIBER_MAGIC: &str = "# dbs-fiber v1";

/// Text format: two header lines, then one `re im` line per entry in
/// row-major order (segment-major).
///
/// ```text
/// # dbs-fiber v1
/// # segments=S modes=M seed=42 stream=0
/// 1.234e-1 -5.6e-2
/// ```
///
/// `seed` and `stream` are `-` for matrices that were not generated.
pub fn write_fiber<W: Write>(mut out: W, tm: &TransferMatrix) -> std::io::Result<()> {
    writeln!(out, "{FIBER_MAGIC}")?;
    let (seed, stream) = match tm.origin {
        Some(s) => (s.seed.to_string(), s.stream_id.to_string()),
        None => ("-".into(), "-".into()),
    };
    writeln!(
        out,
        "# segments={} modes={} seed={seed} stream={stream}",
        tm.segments, tm.modes
    )?;
    for z in &tm.entries {
        writeln!(out, "{:e} {:e}", z.re, z.im)?;
    }
    Ok(())
}

pub fn read_fiber<R: BufRead>(input: R) -> Result<TransferMatrix> {
    let mut lines = input.lines();
    let mut next = |n: usize| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::parse(n, "unexpected end of file"))?
            .map_err(|e| Error::parse(n, e.to_string()))
    };
    if next(1)?.trim_end() != FIBER_MAGIC {
        return Err(Error::parse(1, "missing fiber header"));
    }
    let header = next(2)?;
    let (mut segments, mut modes, mut seed, mut stream) = (None, None, None, None);
    for kv in header.trim_start_matches('#').split_whitespace() {
        match kv.split_once('=') {
            Some(("segments", v)) => segments = v.parse::<usize>().ok(),
            Some(("modes", v)) => modes = v.parse::<usize>().ok(),
            Some(("seed", v)) => seed = v.parse::<u64>().ok(),
            Some(("stream", v)) => stream = v.parse::<u64>().ok(),
            _ => {}
        }
    }
    let (segments, modes) = segments
        .zip(modes)
        .ok_or_else(|| Error::parse(2, "header needs segments= and modes="))?;
    let mut entries = Vec::with_capacity(segments * modes);
    for i in 0..segments * modes {
        let n = i + 3;
        let line = next(n)?;
        let mut f = line.split_whitespace().map(str::parse::<f64>);
        match (f.next(), f.next(), f.next()) {
            (Some(Ok(re)), Some(Ok(im)), None) => entries.push(Complex64::new(re, im)),
            _ => return Err(Error::parse(n, "expected `re im`")),
        }
    }
    let mut tm = TransferMatrix::from_entries(segments, modes, entries)?;
    tm.origin = seed.zip(stream).map(|(s, k)| RandomSource::new(s, k));
    Ok(tm)
}
