//! Report rows emitted by the estimators and verifiers, with their CSV
//! schemas. Formatting is fixed so identical runs produce byte-identical
//! output.

/// A named scalar estimate with replica count, standard error, seed, and
/// window metadata.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: u64,
    pub seed: u64,
    pub space: String,
    pub window_volume: f64,
}

impl EstimateReport {
    pub fn csv_header() -> &'static str {
        "name,estimate,stderr,replicas,space,window_volume,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.name,
            fmt(self.estimate),
            fmt(self.stderr),
            self.replicas,
            self.space,
            fmt(self.window_volume),
            self.seed
        )
    }
}

/// Row produced by the statistical verifiers
/// (`verifier,statistic,n,lhs,rhs,stderr,pvalue,seed`).
#[derive(Clone, Debug)]
pub struct VerifierReport {
    pub verifier: String,
    pub statistic: String,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub pvalue: f64,
    pub seed: u64,
}

impl VerifierReport {
    pub fn csv_header() -> &'static str {
        "verifier,statistic,n,lhs,rhs,stderr,pvalue,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.verifier,
            self.statistic,
            self.n,
            fmt(self.lhs),
            fmt(self.rhs),
            fmt(self.stderr),
            fmt(self.pvalue),
            self.seed
        )
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.pvalue > alpha
    }
}

/// Fixed float formatting (17 significant digits, round-trip exact).
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-17, 123456.789] {
            let s = fmt(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
