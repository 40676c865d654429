//! Scoring metrics and latency statistics.

use std::collections::HashMap;

use super::HarnessError;

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

/// 1 when the normalized (trimmed, lowercased) strings are equal, else 0.
pub fn exact_match(prediction: &str, gold: &str) -> f64 {
    if normalize(prediction) == normalize(gold) {
        1.0
    } else {
        0.0
    }
}

fn tokens(s: &str) -> Vec<String> {
    normalize(s).split_whitespace().map(str::to_string).collect()
}

/// Token-overlap F1 over lowercase whitespace tokens, multiset semantics.
/// Both empty scores 1.0; exactly one empty scores 0.0.
pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    let predicted = tokens(prediction);
    let golden = tokens(gold);
    match (predicted.is_empty(), golden.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for token in &golden {
        *counts.entry(token).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    for token in &predicted {
        if let Some(count) = counts.get_mut(token.as_str()) {
            if *count > 0 {
                *count -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / predicted.len() as f64;
    let recall = overlap as f64 / golden.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Arithmetic mean and sample (n-1) standard deviation. A single sample has
/// zero deviation; an empty list is an error.
pub fn latency_stats(durations_seconds: &[f64]) -> Result<(f64, f64), HarnessError> {
    if durations_seconds.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let n = durations_seconds.len() as f64;
    let mean = durations_seconds.iter().sum::<f64>() / n;
    if durations_seconds.len() == 1 {
        return Ok((mean, 0.0));
    }
    let sum_sq_dev = durations_seconds
        .iter()
        .map(|d| (d - mean) * (d - mean))
        .sum::<f64>();
    Ok((mean, (sum_sq_dev / (n - 1.0)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_normalizes() {
        assert_eq!(exact_match("Paris ", "paris"), 1.0);
        assert_eq!(exact_match("paris, france", "paris"), 0.0);
        assert_eq!(exact_match("", ""), 1.0);
    }

    #[test]
    fn token_f1_known_values() {
        assert_eq!(token_f1("paris", "paris"), 1.0);
        // P = 1/2, R = 1 => F1 = 2/3
        assert!((token_f1("paris france", "paris") - 0.6667).abs() < 1e-4);
        assert_eq!(token_f1("", "paris"), 0.0);
        assert_eq!(token_f1("paris", ""), 0.0);
        assert_eq!(token_f1("", ""), 1.0);
        assert_eq!(token_f1("rome", "paris"), 0.0);
    }

    #[test]
    fn token_f1_multiset_overlap() {
        // "a a b" vs "a b b": overlap = a + b = 2; P = R = 2/3
        let score = token_f1("a a b", "a b b");
        assert!((score - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn latency_known_values() {
        assert_eq!(latency_stats(&[4.0]).unwrap(), (4.0, 0.0));
        let (mean, std) = latency_stats(&[3.0, 4.0, 5.0]).unwrap();
        assert!((mean - 4.0).abs() < 1e-12);
        assert!((std - 1.0).abs() < 1e-12);
        assert!(matches!(
            latency_stats(&[]),
            Err(HarnessError::EmptyInput)
        ));
    }

    #[test]
    fn f1_equals_exact_match_on_single_token_pairs() {
        for (a, b) in [("paris", "paris"), ("rome", "paris"), ("x", "y"), ("q", "q")] {
            assert_eq!(token_f1(a, b), exact_match(a, b));
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn f1_is_bounded_and_swap_symmetric(
                a in "[a-c ]{0,16}",
                b in "[a-c ]{0,16}",
            ) {
                let forward = token_f1(&a, &b);
                prop_assert!((0.0..=1.0).contains(&forward));
                // swapping only exchanges the precision and recall roles, and
                // F1 is symmetric in them
                prop_assert!((forward - token_f1(&b, &a)).abs() < 1e-12);
            }

            #[test]
            fn identical_texts_score_one(a in "[a-c]{1,4}( [a-c]{1,4}){0,4}") {
                prop_assert!((token_f1(&a, &a) - 1.0).abs() < 1e-12);
            }
        }
    }
}
