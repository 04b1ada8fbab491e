//! Dynamic re-evaluation: a single-layer LSTM over a valuation time
//! series, trained with truncated BPTT and plain gradient descent, used
//! to roll the series forward.
//!
//! The gate nonlinearity is called "logistic" throughout; sigma is already
//! taken by the viscosity coefficient elsewhere in this crate.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("series of {len} points cannot fill a window of {window} plus a target")]
    InsufficientData { len: usize, window: usize },
    #[error("normalization bounds are degenerate (max must exceed min)")]
    DegenerateRange,
    #[error("years must be strictly increasing (offending index {index})")]
    YearsNotIncreasing { index: usize },
    #[error("value at index {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Ordered (year, value) series with min-max normalization bounds.
///
/// Bounds default to the observed range; they can be supplied explicitly,
/// which is the only way a constant series can be normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDataset {
    points: Vec<(i32, f64)>,
    min: f64,
    max: f64,
}

impl SeriesDataset {
    pub fn new(points: Vec<(i32, f64)>) -> Result<Self, ForecastError> {
        Self::check_points(&points)?;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &(_, v) in &points {
            min = min.min(v);
            max = max.max(v);
        }
        if !(max > min) {
            return Err(ForecastError::DegenerateRange);
        }
        Ok(SeriesDataset { points, min, max })
    }

    /// Explicit normalization bounds, wider or narrower than the data.
    pub fn with_bounds(points: Vec<(i32, f64)>, min: f64, max: f64) -> Result<Self, ForecastError> {
        Self::check_points(&points)?;
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(ForecastError::DegenerateRange);
        }
        Ok(SeriesDataset { points, min, max })
    }

    fn check_points(points: &[(i32, f64)]) -> Result<(), ForecastError> {
        for (index, &(_, v)) in points.iter().enumerate() {
            if !v.is_finite() {
                return Err(ForecastError::NonFiniteValue { index });
            }
        }
        for (index, pair) in points.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(ForecastError::YearsNotIncreasing { index: index + 1 });
            }
        }
        Ok(())
    }

    pub fn points(&self) -> &[(i32, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    pub fn normalize(&self, value: f64) -> f64 {
        (value - self.min) / (self.max - self.min)
    }

    pub fn denormalize(&self, scaled: f64) -> f64 {
        self.min + scaled * (self.max - self.min)
    }

    pub fn normalized_values(&self) -> Vec<f64> {
        self.points.iter().map(|&(_, v)| self.normalize(v)).collect()
    }
}

// Flat parameter layout: per gate (f, i, candidate, o) an input matrix
// [H x D], a recurrent matrix [H x H], and a bias [H]; then the output
// projection [H] and its scalar bias.
#[derive(Debug, Clone, Copy)]
struct Layout {
    hidden: usize,
    input: usize,
}

impl Layout {
    fn gate_size(&self) -> usize {
        self.hidden * self.input + self.hidden * self.hidden + self.hidden
    }

    fn gate_offsets(&self, gate: usize) -> (usize, usize, usize) {
        let base = gate * self.gate_size();
        let wx = base;
        let wh = base + self.hidden * self.input;
        let b = wh + self.hidden * self.hidden;
        (wx, wh, b)
    }

    fn w_out(&self) -> usize {
        4 * self.gate_size()
    }

    fn b_out(&self) -> usize {
        self.w_out() + self.hidden
    }

    fn total(&self) -> usize {
        self.b_out() + 1
    }
}

const GATE_F: usize = 0;
const GATE_I: usize = 1;
const GATE_C: usize = 2;
const GATE_O: usize = 3;

/// Single-layer LSTM cell with a scalar output projection. The training
/// window is carried with the cell so rollouts replay the same framing
/// the supervision used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    hidden: usize,
    input: usize,
    window: usize,
    params: Vec<f64>,
}

impl LstmCell {
    /// Deterministic initialization from a seed: small uniform weights,
    /// forget-gate bias raised to one.
    pub fn seeded(hidden: usize, input: usize, window: usize, seed: u64) -> Self {
        let layout = Layout { hidden, input };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 0.4 / ((hidden + input) as f64).sqrt();
        let mut params: Vec<f64> =
            (0..layout.total()).map(|_| rng.gen_range(-scale..scale)).collect();
        let (_, _, b_f) = layout.gate_offsets(GATE_F);
        for slot in &mut params[b_f..b_f + hidden] {
            *slot = 1.0;
        }
        LstmCell { hidden, input, window, params }
    }

    fn layout(&self) -> Layout {
        Layout { hidden: self.hidden, input: self.input }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_size(&self) -> usize {
        self.input
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, index: usize) -> f64 {
        self.params[index]
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        self.params[index] = value;
    }

    fn apply_gradients(&mut self, grads: &[f64], learning_rate: f64) {
        for (p, g) in self.params.iter_mut().zip(grads) {
            *p -= learning_rate * g;
        }
    }

    /// Output projection of a hidden state.
    pub fn readout(&self, h: &[f64]) -> f64 {
        let layout = self.layout();
        let w = &self.params[layout.w_out()..layout.w_out() + self.hidden];
        w.iter().zip(h).map(|(wi, hi)| wi * hi).sum::<f64>() + self.params[layout.b_out()]
    }
}

/// Hidden and cell state; starts at zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Raw gate activations of one step, exposed for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct GateActivations {
    pub forget: Vec<f64>,
    pub input: Vec<f64>,
    pub candidate: Vec<f64>,
    pub output: Vec<f64>,
}

fn gate_preactivations(
    cell: &LstmCell,
    gate: usize,
    x: &[f64],
    h_prev: &[f64],
) -> Vec<f64> {
    let layout = cell.layout();
    let (wx, wh, b) = layout.gate_offsets(gate);
    let mut z = vec![0.0; cell.hidden];
    for r in 0..cell.hidden {
        let mut acc = cell.params[b + r];
        for (c, &xv) in x.iter().enumerate() {
            acc += cell.params[wx + r * cell.input + c] * xv;
        }
        for (c, &hv) in h_prev.iter().enumerate() {
            acc += cell.params[wh + r * cell.hidden + c] * hv;
        }
        z[r] = acc;
    }
    z
}

/// Gate activations for one input against one prior state.
pub fn gate_activations(
    cell: &LstmCell,
    x: &[f64],
    state: &LstmState,
) -> Result<GateActivations, ForecastError> {
    check_shapes(cell, x, state)?;
    let forget = gate_preactivations(cell, GATE_F, x, &state.h)
        .into_iter()
        .map(logistic)
        .collect();
    let input = gate_preactivations(cell, GATE_I, x, &state.h)
        .into_iter()
        .map(logistic)
        .collect();
    let candidate = gate_preactivations(cell, GATE_C, x, &state.h)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let output = gate_preactivations(cell, GATE_O, x, &state.h)
        .into_iter()
        .map(logistic)
        .collect();
    Ok(GateActivations { forget, input, candidate, output })
}

fn check_shapes(cell: &LstmCell, x: &[f64], state: &LstmState) -> Result<(), ForecastError> {
    if x.len() != cell.input {
        return Err(ForecastError::ShapeMismatch { expected: cell.input, found: x.len() });
    }
    if state.h.len() != cell.hidden {
        return Err(ForecastError::ShapeMismatch { expected: cell.hidden, found: state.h.len() });
    }
    if state.c.len() != cell.hidden {
        return Err(ForecastError::ShapeMismatch { expected: cell.hidden, found: state.c.len() });
    }
    Ok(())
}

/// One LSTM step: logistic gates, tanh candidate,
/// c' = f . c + i . candidate, h' = o . tanh(c').
pub fn lstm_step(
    x: &[f64],
    state: &LstmState,
    cell: &LstmCell,
) -> Result<LstmState, ForecastError> {
    let gates = gate_activations(cell, x, state)?;
    let mut c = vec![0.0; cell.hidden];
    let mut h = vec![0.0; cell.hidden];
    for r in 0..cell.hidden {
        c[r] = gates.forget[r] * state.c[r] + gates.input[r] * gates.candidate[r];
        h[r] = gates.output[r] * c[r].tanh();
    }
    Ok(LstmState { h, c })
}

// Cached activations of one step, for backpropagation.
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
}

fn forward_window(cell: &LstmCell, inputs: &[f64]) -> (Vec<StepCache>, LstmState) {
    let mut state = LstmState::zeros(cell.hidden);
    let mut caches = Vec::with_capacity(inputs.len());
    for &value in inputs {
        let x = vec![value];
        let gates = gate_activations(cell, &x, &state).expect("shapes fixed by construction");
        let mut c = vec![0.0; cell.hidden];
        let mut h = vec![0.0; cell.hidden];
        for r in 0..cell.hidden {
            c[r] = gates.forget[r] * state.c[r] + gates.input[r] * gates.candidate[r];
            h[r] = gates.output[r] * c[r].tanh();
        }
        caches.push(StepCache {
            x,
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            f: gates.forget,
            i: gates.input,
            g: gates.candidate,
            o: gates.output,
            c: c.clone(),
        });
        state = LstmState { h, c };
    }
    (caches, state)
}

/// Squared one-step-ahead loss of a window against its target.
pub fn window_loss(cell: &LstmCell, inputs: &[f64], target: f64) -> f64 {
    let (_, state) = forward_window(cell, inputs);
    let y = cell.readout(&state.h);
    (y - target) * (y - target)
}

/// Loss and analytic parameter gradients for one window, via
/// backpropagation through time over the window.
pub fn window_gradients(cell: &LstmCell, inputs: &[f64], target: f64) -> (f64, Vec<f64>) {
    let layout = cell.layout();
    let hidden = cell.hidden;
    let (caches, state) = forward_window(cell, inputs);
    let y = cell.readout(&state.h);
    let loss = (y - target) * (y - target);
    let dy = 2.0 * (y - target);

    let mut grads = vec![0.0; layout.total()];
    let w_out = layout.w_out();
    for r in 0..hidden {
        grads[w_out + r] += dy * state.h[r];
    }
    grads[layout.b_out()] += dy;

    let mut dh: Vec<f64> = (0..hidden).map(|r| dy * cell.params[w_out + r]).collect();
    let mut dc = vec![0.0; hidden];

    for cache in caches.iter().rev() {
        let mut dz_f = vec![0.0; hidden];
        let mut dz_i = vec![0.0; hidden];
        let mut dz_g = vec![0.0; hidden];
        let mut dz_o = vec![0.0; hidden];
        for r in 0..hidden {
            let tanh_c = cache.c[r].tanh();
            let do_r = dh[r] * tanh_c;
            dz_o[r] = do_r * cache.o[r] * (1.0 - cache.o[r]);
            let dc_r = dc[r] + dh[r] * cache.o[r] * (1.0 - tanh_c * tanh_c);
            dz_f[r] = dc_r * cache.c_prev[r] * cache.f[r] * (1.0 - cache.f[r]);
            dz_i[r] = dc_r * cache.g[r] * cache.i[r] * (1.0 - cache.i[r]);
            dz_g[r] = dc_r * cache.i[r] * (1.0 - cache.g[r] * cache.g[r]);
            dc[r] = dc_r * cache.f[r];
        }

        let mut dh_prev = vec![0.0; hidden];
        for (gate, dz) in
            [(GATE_F, &dz_f), (GATE_I, &dz_i), (GATE_C, &dz_g), (GATE_O, &dz_o)]
        {
            let (wx, wh, b) = layout.gate_offsets(gate);
            for r in 0..hidden {
                for (c, &xv) in cache.x.iter().enumerate() {
                    grads[wx + r * cell.input + c] += dz[r] * xv;
                }
                for (c, &hv) in cache.h_prev.iter().enumerate() {
                    grads[wh + r * hidden + c] += dz[r] * hv;
                }
                grads[b + r] += dz[r];
                for c in 0..hidden {
                    dh_prev[c] += cell.params[wh + r * hidden + c] * dz[r];
                }
            }
        }
        dh = dh_prev;
    }

    (loss, grads)
}

/// Training configuration: window framing, plain gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { window: 4, epochs: 600, learning_rate: 0.3, seed: 42, hidden: 8 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), ForecastError> {
        if self.window == 0 {
            return Err(ForecastError::InvalidConfig("window must be positive"));
        }
        if self.hidden == 0 {
            return Err(ForecastError::InvalidConfig("hidden size must be positive"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(ForecastError::InvalidConfig("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Training outcome with the mean window loss before and after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub cell: LstmCell,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs: usize,
}

fn mean_loss(cell: &LstmCell, windows: &[(Vec<f64>, f64)]) -> f64 {
    windows.iter().map(|(inputs, target)| window_loss(cell, inputs, *target)).sum::<f64>()
        / windows.len() as f64
}

/// Trains a fresh cell on all length-`window` windows of the normalized
/// series with batch gradient descent.
pub fn train(dataset: &SeriesDataset, config: &TrainConfig) -> Result<TrainReport, ForecastError> {
    config.validate()?;
    if dataset.len() <= config.window {
        return Err(ForecastError::InsufficientData { len: dataset.len(), window: config.window });
    }
    let values = dataset.normalized_values();
    let windows: Vec<(Vec<f64>, f64)> = (0..values.len() - config.window)
        .map(|t| (values[t..t + config.window].to_vec(), values[t + config.window]))
        .collect();

    let mut cell = LstmCell::seeded(config.hidden, 1, config.window, config.seed);
    let initial_loss = mean_loss(&cell, &windows);
    let scale = 1.0 / windows.len() as f64;
    for _ in 0..config.epochs {
        let mut batch = vec![0.0; cell.param_count()];
        for (inputs, target) in &windows {
            let (_, grads) = window_gradients(&cell, inputs, *target);
            for (acc, g) in batch.iter_mut().zip(&grads) {
                *acc += g * scale;
            }
        }
        cell.apply_gradients(&batch, config.learning_rate);
    }
    let final_loss = mean_loss(&cell, &windows);
    Ok(TrainReport { cell, initial_loss, final_loss, epochs: config.epochs })
}

/// Autoregressive rollout: each step replays the trailing window from a
/// zero state (the framing the cell was trained on), appends the
/// prediction, and continues. Outputs are denormalized.
pub fn forecast(
    cell: &LstmCell,
    dataset: &SeriesDataset,
    horizon: usize,
) -> Result<Vec<(i32, f64)>, ForecastError> {
    let window = cell.window.max(1);
    if dataset.len() < window {
        return Err(ForecastError::InsufficientData { len: dataset.len(), window });
    }
    let values = dataset.normalized_values();
    let mut buffer: Vec<f64> = values[values.len() - window..].to_vec();
    let mut year = dataset.points().last().map(|&(y, _)| y).unwrap_or(0);
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let (_, state) = forward_window(cell, &buffer);
        let y = cell.readout(&state.h);
        buffer.remove(0);
        buffer.push(y);
        year += 1;
        out.push((year, dataset.denormalize(y)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero_cell(hidden: usize) -> LstmCell {
        let mut cell = LstmCell::seeded(hidden, 1, 4, 0);
        for i in 0..cell.param_count() {
            cell.set_param(i, 0.0);
        }
        cell
    }

    #[test]
    fn zero_parameters_give_zero_hidden_state() {
        let cell = zero_cell(3);
        let state = LstmState::zeros(3);
        let gates = gate_activations(&cell, &[0.7], &state).unwrap();
        for r in 0..3 {
            assert_eq!(gates.output[r], 0.5);
            assert_eq!(gates.forget[r], 0.5);
            assert_eq!(gates.candidate[r], 0.0);
        }
        let next = lstm_step(&[0.7], &state, &cell).unwrap();
        assert_eq!(next.h, vec![0.0; 3]);
        assert_eq!(next.c, vec![0.0; 3]);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell_state() {
        let mut cell = zero_cell(2);
        let layout = Layout { hidden: 2, input: 1 };
        let (_, _, b_f) = layout.gate_offsets(GATE_F);
        cell.set_param(b_f, 50.0);
        cell.set_param(b_f + 1, 50.0);
        let state = LstmState { h: vec![0.0; 2], c: vec![0.8, -0.4] };
        let gates = gate_activations(&cell, &[0.3], &state).unwrap();
        assert!(gates.forget.iter().all(|&f| f > 0.999_999));
        let next = lstm_step(&[0.3], &state, &cell).unwrap();
        // candidate is zero, so c' ~ c.
        assert_abs_diff_eq!(next.c[0], 0.8, epsilon = 1e-6);
        assert_abs_diff_eq!(next.c[1], -0.4, epsilon = 1e-6);
    }

    #[test]
    fn seeded_cells_are_reproducible() {
        let a = LstmCell::seeded(5, 1, 4, 1234);
        let b = LstmCell::seeded(5, 1, 4, 1234);
        assert_eq!(a, b);
        let state = LstmState::zeros(5);
        let s1 = lstm_step(&[0.25], &state, &a).unwrap();
        let s2 = lstm_step(&[0.25], &state, &b).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn step_rejects_wrong_shapes() {
        let cell = LstmCell::seeded(3, 1, 4, 0);
        let state = LstmState::zeros(3);
        assert_eq!(
            lstm_step(&[0.1, 0.2], &state, &cell).unwrap_err(),
            ForecastError::ShapeMismatch { expected: 1, found: 2 }
        );
        let bad_state = LstmState::zeros(2);
        assert!(lstm_step(&[0.1], &bad_state, &cell).is_err());
    }

    #[test]
    fn dataset_rejects_degenerate_bounds_and_bad_years() {
        let constant: Vec<(i32, f64)> = (2000..2010).map(|y| (y, 5.0)).collect();
        assert_eq!(SeriesDataset::new(constant.clone()).unwrap_err(), ForecastError::DegenerateRange);
        assert!(SeriesDataset::with_bounds(constant, 0.0, 10.0).is_ok());
        let unsorted = vec![(2001, 1.0), (2000, 2.0)];
        assert_eq!(
            SeriesDataset::new(unsorted).unwrap_err(),
            ForecastError::YearsNotIncreasing { index: 1 }
        );
    }

    #[test]
    fn train_requires_more_points_than_window() {
        let points: Vec<(i32, f64)> = (0..4).map(|k| (2000 + k, k as f64)).collect();
        let dataset = SeriesDataset::new(points).unwrap();
        let config = TrainConfig { window: 4, epochs: 1, ..TrainConfig::default() };
        assert_eq!(
            train(&dataset, &config).unwrap_err(),
            ForecastError::InsufficientData { len: 4, window: 4 }
        );
    }

    #[test]
    fn forecast_horizon_zero_is_empty() {
        let points: Vec<(i32, f64)> = (0..8).map(|k| (2000 + k, k as f64)).collect();
        let dataset = SeriesDataset::new(points).unwrap();
        let cell = LstmCell::seeded(4, 1, 4, 7);
        assert!(forecast(&cell, &dataset, 0).unwrap().is_empty());
    }

    #[test]
    fn forecast_years_continue_the_series() {
        let points: Vec<(i32, f64)> = (0..8).map(|k| (2000 + k, k as f64)).collect();
        let dataset = SeriesDataset::new(points).unwrap();
        let cell = LstmCell::seeded(4, 1, 4, 7);
        let rows = forecast(&cell, &dataset, 3).unwrap();
        let years: Vec<i32> = rows.iter().map(|&(y, _)| y).collect();
        assert_eq!(years, vec![2008, 2009, 2010]);
    }

    #[test]
    fn gradients_match_finite_differences_on_one_cell() {
        let cell = LstmCell::seeded(3, 1, 4, 99);
        let inputs = [0.2, 0.5, 0.9];
        let target = 0.4;
        let (_, analytic) = window_gradients(&cell, &inputs, target);
        let step = 1e-5;
        for index in 0..cell.param_count() {
            let mut plus = cell.clone();
            plus.set_param(index, cell.param(index) + step);
            let mut minus = cell.clone();
            minus.set_param(index, cell.param(index) - step);
            let numeric =
                (window_loss(&plus, &inputs, target) - window_loss(&minus, &inputs, target))
                    / (2.0 * step);
            let a = analytic[index];
            let err = (a - numeric).abs();
            assert!(
                err <= 1e-8 || err / a.abs().max(numeric.abs()) <= 1e-4,
                "param {index}: analytic {a} vs numeric {numeric}"
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gates_stay_inside_open_unit_interval(
                seed in 0u64..1000,
                x in -100.0f64..100.0,
                h in -1.0f64..1.0,
                c in -5.0f64..5.0,
            ) {
                let cell = LstmCell::seeded(3, 1, 4, seed);
                let state = LstmState { h: vec![h; 3], c: vec![c; 3] };
                let gates = gate_activations(&cell, &[x], &state).unwrap();
                for r in 0..3 {
                    prop_assert!(gates.forget[r] > 0.0 && gates.forget[r] < 1.0);
                    prop_assert!(gates.input[r] > 0.0 && gates.input[r] < 1.0);
                    prop_assert!(gates.output[r] > 0.0 && gates.output[r] < 1.0);
                    prop_assert!(gates.candidate[r] > -1.0 && gates.candidate[r] < 1.0);
                }
            }

            #[test]
            fn normalization_roundtrips(
                value in -1e6f64..1e6,
                min in -1e3f64..0.0,
                span in 0.5f64..1e3,
            ) {
                let dataset = SeriesDataset::with_bounds(
                    vec![(2000, min), (2001, min + span)],
                    min,
                    min + span,
                ).unwrap();
                let roundtrip = dataset.denormalize(dataset.normalize(value));
                prop_assert!((roundtrip - value).abs() <= 1e-12 * value.abs().max(1.0));
            }
        }
    }
}
