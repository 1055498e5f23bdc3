//! Closed-form reference values used to cross-check the numerical solvers.
//!
//! Everything here is computed by textbook formulas (factorial sums and
//! weight counting), with no dependence on the null-space machinery it is
//! used to validate.

/// Exact factorials up to 33! (the largest representable exactly in f64 is
/// well beyond the angular momenta handled here).
fn factorial(n: i64) -> f64 {
    debug_assert!((0..=33).contains(&n), "factorial argument {n} out of range");
    (1..=n).map(|k| k as f64).product()
}

/// Clebsch-Gordan coefficient `<j1 m1 ; j2 m2 | J M>` in the
/// Condon-Shortley convention, evaluated from Racah's closed form. All
/// arguments are doubled (two_j1 = 2*j1 and so on) so half-integer spins
/// stay integral.
pub fn racah_clebsch_gordan(
    two_j1: i64,
    two_m1: i64,
    two_j2: i64,
    two_m2: i64,
    two_j: i64,
    two_m: i64,
) -> f64 {
    if two_m1.abs() > two_j1 || two_m2.abs() > two_j2 || two_m.abs() > two_j {
        return 0.0;
    }
    if (two_j1 + two_m1) % 2 != 0 || (two_j2 + two_m2) % 2 != 0 || (two_j + two_m) % 2 != 0 {
        return 0.0;
    }
    if two_m1 + two_m2 != two_m {
        return 0.0;
    }
    // Triangle condition and integral coupling.
    if two_j > two_j1 + two_j2 || two_j < (two_j1 - two_j2).abs() {
        return 0.0;
    }
    if (two_j1 + two_j2 + two_j) % 2 != 0 {
        return 0.0;
    }

    // Halved integer combinations (all integral under the checks above).
    let a = (two_j1 + two_j2 - two_j) / 2;
    let b = (two_j1 - two_j2 + two_j) / 2;
    let c = (-two_j1 + two_j2 + two_j) / 2;
    let total_plus_one = (two_j1 + two_j2 + two_j) / 2 + 1;

    let prefactor = ((two_j + 1) as f64 * factorial(a) * factorial(b) * factorial(c)
        / factorial(total_plus_one))
    .sqrt();

    let norm = (factorial((two_j + two_m) / 2)
        * factorial((two_j - two_m) / 2)
        * factorial((two_j1 - two_m1) / 2)
        * factorial((two_j1 + two_m1) / 2)
        * factorial((two_j2 - two_m2) / 2)
        * factorial((two_j2 + two_m2) / 2))
    .sqrt();

    let k_min = 0
        .max((two_j2 - two_j - two_m1) / 2)
        .max((two_j1 + two_m2 - two_j) / 2);
    let k_max = a.min((two_j1 - two_m1) / 2).min((two_j2 + two_m2) / 2);

    let mut series = 0.0;
    let mut k = k_min;
    while k <= k_max {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let denom = factorial(k)
            * factorial(a - k)
            * factorial((two_j1 - two_m1) / 2 - k)
            * factorial((two_j2 + two_m2) / 2 - k)
            * factorial((two_j - two_j2 + two_m1) / 2 + k)
            * factorial((two_j - two_j1 - two_m2) / 2 + k);
        series += sign / denom;
        k += 1;
    }

    prefactor * norm * series
}

/// Multiplicity of total spin J inside j1 (x) j2, by counting weight-space
/// dimensions: mult(J) = #\{m1 + m2 = J\} - #\{m1 + m2 = J + 1\}.
pub fn su2_tensor_multiplicity(two_j1: u32, two_j2: u32, two_j: u32) -> usize {
    let count_weight = |two_m: i64| -> i64 {
        let mut count = 0;
        let mut two_m1 = -(two_j1 as i64);
        while two_m1 <= two_j1 as i64 {
            let two_m2 = two_m - two_m1;
            if two_m2.abs() <= two_j2 as i64 && (two_m2 + two_j2 as i64) % 2 == 0 {
                count += 1;
            }
            two_m1 += 2;
        }
        count
    };
    (count_weight(two_j as i64) - count_weight(two_j as i64 + 2)).max(0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matches_frozen_symbolic_values() {
        // Reference values cross-checked against symbolic algebra tables.
        assert_abs_diff_eq!(racah_clebsch_gordan(4, 0, 12, 0, 8, 2), 0.0);
        assert_abs_diff_eq!(racah_clebsch_gordan(2, 2, 2, 2, 4, 4), 1.0);
        assert_abs_diff_eq!(
            racah_clebsch_gordan(4, 4, 2, -2, 6, 2),
            (1.0f64 / 15.0).sqrt(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            racah_clebsch_gordan(1, 1, 1, -1, 2, 0),
            0.5f64.sqrt(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            racah_clebsch_gordan(1, 1, 1, -1, 0, 0),
            0.5f64.sqrt(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            racah_clebsch_gordan(1, -1, 1, 1, 0, 0),
            -(0.5f64.sqrt()),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            racah_clebsch_gordan(5, 3, 4, 2, 5, 5),
            -(3.0f64 / 7.0).sqrt(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            racah_clebsch_gordan(5, 3, 3, 1, 6, 4),
            (1.0f64 / 12.0).sqrt(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            racah_clebsch_gordan(5, 3, 3, 1, 4, 4),
            -(8.0f64 / 21.0).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn columns_are_orthonormal() {
        // Unitarity of the coupling for a few (j1, j2, J, J') pairs.
        for (two_j1, two_j2) in [(2i64, 2i64), (3, 1), (4, 2)] {
            for two_j in 0..=(two_j1 + two_j2) {
                for two_jp in 0..=(two_j1 + two_j2) {
                    for two_m in [-two_j, 0, two_j] {
                        if (two_j + two_m) % 2 != 0 || (two_jp + two_m) % 2 != 0 || two_jp < two_m.abs() {
                            continue;
                        }
                        let mut dot = 0.0;
                        let mut two_m1 = -two_j1;
                        while two_m1 <= two_j1 {
                            let two_m2 = two_m - two_m1;
                            dot += racah_clebsch_gordan(two_j1, two_m1, two_j2, two_m2, two_j, two_m)
                                * racah_clebsch_gordan(two_j1, two_m1, two_j2, two_m2, two_jp, two_m);
                            two_m1 += 2;
                        }
                        let want = if two_j == two_jp
                            && su2_tensor_multiplicity(
                                two_j1 as u32,
                                two_j2 as u32,
                                two_j as u32,
                            ) > 0
                        {
                            1.0
                        } else {
                            0.0
                        };
                        assert_abs_diff_eq!(dot, want, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn weight_counting_matches_triangle_rule() {
        for two_j1 in 0..=6u32 {
            for two_j2 in 0..=6u32 {
                for two_j in 0..=14u32 {
                    let triangle = two_j as i64 >= (two_j1 as i64 - two_j2 as i64).abs()
                        && two_j <= two_j1 + two_j2
                        && (two_j1 + two_j2 + two_j) % 2 == 0;
                    let want = usize::from(triangle);
                    assert_eq!(su2_tensor_multiplicity(two_j1, two_j2, two_j), want);
                }
            }
        }
    }
}
