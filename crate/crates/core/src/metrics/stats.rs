use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

/// Two-sided exact sign test; ties are dropped before calling.
pub fn sign_test(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let tail = Binomial::new(0.5, n).expect("valid binomial").cdf(wins.min(losses));
    (2.0 * tail).min(1.0)
}

/// Paired per-record comparison of run A against run B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub wins: u64,
    pub ties: u64,
    pub losses: u64,
    pub p_value: f64,
}

impl PairedComparison {
    pub fn from_pairs<T: PartialOrd>(pairs: impl IntoIterator<Item = (T, T)>) -> PairedComparison {
        let (mut wins, mut ties, mut losses) = (0, 0, 0);
        for (a, b) in pairs {
            if a > b {
                wins += 1;
            } else if a < b {
                losses += 1;
            } else {
                ties += 1;
            }
        }
        PairedComparison { wins, ties, losses, p_value: sign_test(wins, losses) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_p_values() {
        // 2 * 0.5^10
        assert!((sign_test(10, 0) - 0.001953125).abs() < 1e-12);
        // 2 * (1 + 10 + 45) / 1024
        assert!((sign_test(8, 2) - 0.109375).abs() < 1e-12);
        assert_eq!(sign_test(5, 5), 1.0);
        assert_eq!(sign_test(0, 0), 1.0);
    }

    #[test]
    fn identical_runs_tie() {
        let c = PairedComparison::from_pairs((0..20).map(|i| (i % 3, i % 3)));
        assert_eq!((c.wins, c.ties, c.losses), (0, 20, 0));
        assert_eq!(c.p_value, 1.0);
        let c = PairedComparison::from_pairs((0..12).map(|i| (i + 1, i)));
        assert_eq!(c.wins, 12);
        assert!(c.p_value < 0.001);
    }
}
