//! Adaptive per-pixel Gaussian mixture model.
//!
//! Every pixel owns `M` Gaussian components, each with a mean vector, one
//! variance shared by all channels and a mixing weight. A new observation is
//! matched against the components in decreasing `w/σ` order, classified
//! against the background prefix of that ranking, and then folded into the
//! model with an online update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::PixelLabel;

pub const MIN_COMPONENTS: usize = 3;
pub const MAX_COMPONENTS: usize = 5;

/// Tunables for one stream's mixture model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    /// Number of Gaussians per pixel, `3..=5`.
    pub components: usize,
    /// Weight learning rate, `0 < α < 1`.
    pub learning_rate: f32,
    /// A value matches a component when every channel lies within
    /// `match_lambda · σ` of its mean.
    pub match_lambda: f32,
    /// Cumulative weight a ranked prefix must exceed to count as background.
    pub background_threshold: f32,
    /// Standard deviation given to freshly created components.
    pub initial_sigma: f32,
    /// Weight given to a component that replaces the weakest one.
    pub initial_weight: f32,
    /// Lower bound on every component variance.
    pub variance_floor: f32,
}

impl MixtureConfig {
    /// Defaults for 8-bit colour channels.
    pub fn color() -> Self {
        Self {
            components: 3,
            learning_rate: 0.05,
            match_lambda: 2.5,
            background_threshold: 0.8,
            initial_sigma: 15.0,
            initial_weight: 0.05,
            variance_floor: 4.0,
        }
    }

    /// Defaults for depth in millimetres.
    pub fn depth() -> Self {
        Self {
            initial_sigma: 100.0,
            ..Self::color()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(MIN_COMPONENTS..=MAX_COMPONENTS).contains(&self.components) {
            return fail(format!(
                "components must be in {MIN_COMPONENTS}..={MAX_COMPONENTS}, got {}",
                self.components
            ));
        }
        let open_unit = |v: f32| v > 0.0 && v < 1.0;
        if !open_unit(self.learning_rate) {
            return fail(format!("learning_rate must be in (0, 1), got {}", self.learning_rate));
        }
        if !open_unit(self.background_threshold) {
            return fail(format!(
                "background_threshold must be in (0, 1), got {}",
                self.background_threshold
            ));
        }
        if !open_unit(self.initial_weight) {
            return fail(format!("initial_weight must be in (0, 1), got {}", self.initial_weight));
        }
        if !(self.match_lambda > 0.0) {
            return fail(format!("match_lambda must be positive, got {}", self.match_lambda));
        }
        if !(self.initial_sigma > 0.0) {
            return fail(format!("initial_sigma must be positive, got {}", self.initial_sigma));
        }
        if !(self.variance_floor > 0.0) {
            return fail(format!("variance_floor must be positive, got {}", self.variance_floor));
        }
        Ok(())
    }

    #[inline]
    fn initial_variance(&self) -> f32 {
        (self.initial_sigma * self.initial_sigma).max(self.variance_floor)
    }
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self::color()
    }
}

/// The Gaussian mixture of a single pixel with `D`-dimensional observations.
///
/// Storage is fixed at [`MAX_COMPONENTS`]; only the first `components` slots
/// are live. Unused slots stay zeroed so that equality and hashing of whole
/// values are meaningful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelMixture<const D: usize> {
    components: usize,
    pub(crate) means: [[f32; D]; MAX_COMPONENTS],
    pub(crate) variances: [f32; MAX_COMPONENTS],
    pub(crate) weights: [f32; MAX_COMPONENTS],
}

/// Component indices ordered by decreasing `w/σ`, ties broken by index.
#[derive(Clone, Copy, Debug)]
struct Ranking {
    order: [usize; MAX_COMPONENTS],
    len: usize,
}

impl Ranking {
    #[inline]
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.order[..self.len].iter().copied()
    }

    #[inline]
    fn weakest(&self) -> usize {
        self.order[self.len - 1]
    }
}

impl<const D: usize> PixelMixture<D> {
    /// Seeds a mixture from the first observation of the pixel.
    pub fn init(first_value: [f32; D], config: &MixtureConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::init_unchecked(first_value, config))
    }

    #[inline]
    pub(crate) fn init_unchecked(first_value: [f32; D], config: &MixtureConfig) -> Self {
        let var = config.initial_variance();
        let mut mixture = Self {
            components: config.components,
            means: [[0.0; D]; MAX_COMPONENTS],
            variances: [0.0; MAX_COMPONENTS],
            weights: [0.0; MAX_COMPONENTS],
        };
        mixture.means[0] = first_value;
        mixture.variances[..config.components].fill(var);
        mixture.weights[0] = 1.0;
        mixture
    }

    /// Rebuilds a mixture from raw parameters; lengths give the component count.
    pub fn from_parts(means: &[[f32; D]], variances: &[f32], weights: &[f32]) -> Result<Self> {
        let m = means.len();
        if !(MIN_COMPONENTS..=MAX_COMPONENTS).contains(&m) || variances.len() != m || weights.len() != m {
            return Err(Error::Layout(format!(
                "mixture parts of lengths {}/{}/{}",
                m,
                variances.len(),
                weights.len()
            )));
        }
        let mut mixture = Self {
            components: m,
            means: [[0.0; D]; MAX_COMPONENTS],
            variances: [0.0; MAX_COMPONENTS],
            weights: [0.0; MAX_COMPONENTS],
        };
        mixture.means[..m].copy_from_slice(means);
        mixture.variances[..m].copy_from_slice(variances);
        mixture.weights[..m].copy_from_slice(weights);
        Ok(mixture)
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn means(&self) -> &[[f32; D]] {
        &self.means[..self.components]
    }

    pub fn variances(&self) -> &[f32] {
        &self.variances[..self.components]
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights[..self.components]
    }

    #[inline]
    pub(crate) fn mean_mut(&mut self, k: usize) -> &mut [f32; D] {
        &mut self.means[k]
    }

    #[inline]
    pub(crate) fn set_variance(&mut self, k: usize, v: f32) {
        self.variances[k] = v;
    }

    #[inline]
    pub(crate) fn set_weight(&mut self, k: usize, w: f32) {
        self.weights[k] = w;
    }

    /// Blank mixture used as a gather target; callers overwrite every live slot.
    #[inline]
    pub(crate) fn zeroed(components: usize) -> Self {
        Self {
            components,
            means: [[0.0; D]; MAX_COMPONENTS],
            variances: [0.0; MAX_COMPONENTS],
            weights: [0.0; MAX_COMPONENTS],
        }
    }

    #[inline]
    fn rank(&self) -> Ranking {
        // w/σ ordering is the same as w²/σ² ordering for w ≥ 0.
        let mut keys = [0.0f32; MAX_COMPONENTS];
        for k in 0..self.components {
            let w = self.weights[k];
            keys[k] = w * w / self.variances[k];
        }
        let mut order = [0usize; MAX_COMPONENTS];
        for k in 0..self.components {
            let mut pos = k;
            while pos > 0 && keys[order[pos - 1]] < keys[k] {
                order[pos] = order[pos - 1];
                pos -= 1;
            }
            order[pos] = k;
        }
        Ranking {
            order,
            len: self.components,
        }
    }

    #[inline]
    fn matches(&self, k: usize, value: &[f32; D], lambda: f32) -> bool {
        let mut dist = 0.0f32;
        for c in 0..D {
            dist = dist.max((value[c] - self.means[k][c]).abs());
        }
        // ‖v − μ‖∞ < λσ, squared to avoid a square root per component.
        dist * dist < lambda * lambda * self.variances[k]
    }

    #[inline]
    fn match_ranked(&self, ranking: &Ranking, value: &[f32; D], config: &MixtureConfig) -> Option<usize> {
        ranking.iter().find(|&k| self.matches(k, value, config.match_lambda))
    }

    #[inline]
    fn classify_ranked(&self, ranking: &Ranking, matched: Option<usize>, config: &MixtureConfig) -> PixelLabel {
        let Some(matched) = matched else {
            return PixelLabel::Foreground;
        };
        let mut cumulative = 0.0f32;
        for k in ranking.iter() {
            if k == matched {
                return PixelLabel::Background;
            }
            cumulative += self.weights[k];
            if cumulative > config.background_threshold {
                break;
            }
        }
        PixelLabel::Foreground
    }

    #[inline]
    fn renormalize(&mut self) {
        let sum: f32 = self.weights[..self.components].iter().sum();
        for w in &mut self.weights[..self.components] {
            *w /= sum;
        }
    }

    #[inline]
    fn update_ranked(&mut self, ranking: &Ranking, value: &[f32; D], matched: Option<usize>, config: &MixtureConfig) {
        let alpha = config.learning_rate;
        match matched {
            Some(m) => {
                for w in &mut self.weights[..self.components] {
                    *w *= 1.0 - alpha;
                }
                self.weights[m] += alpha;
                self.renormalize();

                let rho = alpha / self.weights[m].max(alpha);
                let mean = &mut self.means[m];
                let mut dist_sq = 0.0f32;
                for c in 0..D {
                    mean[c] = (1.0 - rho) * mean[c] + rho * value[c];
                    let d = value[c] - mean[c];
                    dist_sq += d * d;
                }
                let var = (1.0 - rho) * self.variances[m] + rho * dist_sq / D as f32;
                self.variances[m] = var.max(config.variance_floor);
            }
            None => {
                let k = ranking.weakest();
                self.means[k] = *value;
                self.variances[k] = config.initial_variance();
                self.weights[k] = config.initial_weight;
                self.renormalize();
            }
        }
    }

    /// Finds the first component, in decreasing `w/σ` order, whose mean lies
    /// within `λσ` of `value` in every channel.
    pub fn match_component(&self, value: &[f32; D], config: &MixtureConfig) -> Option<usize> {
        self.match_ranked(&self.rank(), value, config)
    }

    /// Background iff `matched` falls inside the smallest ranked prefix whose
    /// cumulative weight exceeds the background threshold.
    pub fn classify(&self, matched: Option<usize>, config: &MixtureConfig) -> PixelLabel {
        self.classify_ranked(&self.rank(), matched, config)
    }

    /// Folds `value` into the model given the outcome of matching.
    ///
    /// A matched component pulls its weight up and its mean and variance
    /// toward the value at rate `α / max(w, α)`. Without a match the weakest
    /// component is replaced by a fresh one centred on the value.
    pub fn update(&mut self, value: &[f32; D], matched: Option<usize>, config: &MixtureConfig) {
        let ranking = self.rank();
        self.update_ranked(&ranking, value, matched, config);
    }

    /// Match, classify, then update. Pure in `(self, value, config)`.
    #[inline]
    pub fn step(&mut self, value: &[f32; D], config: &MixtureConfig) -> PixelLabel {
        let ranking = self.rank();
        let matched = self.match_ranked(&ranking, value, config);
        let label = self.classify_ranked(&ranking, matched, config);
        self.update_ranked(&ranking, value, matched, config);
        label
    }
}

/// Functional form of [`PixelMixture::step`].
pub fn step_pixel<const D: usize>(
    mut mixture: PixelMixture<D>,
    value: &[f32; D],
    config: &MixtureConfig,
) -> (PixelLabel, PixelMixture<D>) {
    let label = mixture.step(value, config);
    (label, mixture)
}
