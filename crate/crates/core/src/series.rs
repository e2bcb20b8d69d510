/// Survival probability recorded after each pulse, starting with the
/// pre-pulse value at index 0.
///
/// Deterministic engines leave `std_error` at zero; the Monte Carlo engine
/// fills it with the standard error of the ensemble mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSeries {
    pub survival: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl SurvivalSeries {
    pub fn new(initial: f64) -> Self {
        Self {
            survival: vec![initial],
            std_error: vec![0.0],
        }
    }

    pub fn push(&mut self, survival: f64, std_error: f64) {
        self.survival.push(survival);
        self.std_error.push(std_error);
    }

    /// Number of pulses covered by the series.
    pub fn kicks(&self) -> usize {
        self.survival.len() - 1
    }

    pub fn final_survival(&self) -> f64 {
        *self.survival.last().expect("series always holds S_0")
    }

    pub fn final_std_error(&self) -> f64 {
        *self.std_error.last().expect("series always holds S_0")
    }

    pub fn is_nonincreasing(&self, tolerance: f64) -> bool {
        self.survival.windows(2).all(|w| w[1] <= w[0] + tolerance)
    }
}
