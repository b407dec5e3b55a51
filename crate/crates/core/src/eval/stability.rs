use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Epochs skipped before stability statistics are taken.
pub const DEFAULT_SKIP: usize = 20;

/// Mean and population standard deviation of a per-epoch metric after the
/// first `skip_n` epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityStats {
    pub skip_n: usize,
    pub mean: f64,
    pub std: f64,
    pub trace: Vec<f64>,
}

/// `trace[e]` is the metric after epoch `e + 1`. Needs at least two epochs
/// beyond `skip_n`.
pub fn stability_stats(trace: &[f64], skip_n: usize) -> Result<StabilityStats> {
    if trace.len() < skip_n + 2 {
        return Err(Error::data(format!(
            "stability needs more than {} epochs, trace has {}",
            skip_n + 1,
            trace.len()
        )));
    }
    let kept = &trace[skip_n..];
    let n = kept.len() as f64;
    // Shifted by the first kept value so a constant trace gives exactly 0.
    let origin = kept[0];
    let shift = kept.iter().map(|v| v - origin).sum::<f64>() / n;
    let var = kept.iter().map(|v| (v - origin - shift).powi(2)).sum::<f64>() / n;
    Ok(StabilityStats {
        skip_n,
        mean: origin + shift,
        std: var.sqrt(),
        trace: trace.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_trace() {
        let s = stability_stats(&[0.7; 40], 20).unwrap();
        assert!((s.mean - 0.7).abs() < 1e-15);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn alternating_after_skip() {
        let v = 0.6;
        let mut trace: Vec<f64> = (0..20).map(|e| 0.1 + 0.02 * e as f64).collect();
        trace.extend((0..10).map(|e| if e % 2 == 0 { v + 0.01 } else { v - 0.01 }));
        let s = stability_stats(&trace, 20).unwrap();
        assert!((s.mean - v).abs() < 1e-12);
        assert!((s.std - 0.01).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(stability_stats(&[0.5; 20], 20).is_err());
        assert!(stability_stats(&[0.5; 21], 20).is_err());
        assert!(stability_stats(&[0.5; 22], 20).is_ok());
    }
}
