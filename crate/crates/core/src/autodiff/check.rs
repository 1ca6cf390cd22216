//! Central finite-difference gradient checking.

use super::{AutodiffError, Matrix};

/// A set of named parameter matrices that can be perturbed in place.
pub trait ParameterSet {
    fn group_count(&self) -> usize;
    fn group_name(&self, index: usize) -> String;
    fn group(&self, index: usize) -> &Matrix;
    fn group_mut(&mut self, index: usize) -> &mut Matrix;
}

impl ParameterSet for Vec<Matrix> {
    fn group_count(&self) -> usize {
        self.len()
    }

    fn group_name(&self, index: usize) -> String {
        format!("group{index}")
    }

    fn group(&self, index: usize) -> &Matrix {
        &self[index]
    }

    fn group_mut(&mut self, index: usize) -> &mut Matrix {
        &mut self[index]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupError {
    pub name: String,
    pub entries: usize,
    pub max_rel_error: f64,
    /// Flat index of the worst entry.
    pub worst_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub epsilon: f64,
    pub tolerance: f64,
    pub groups: Vec<GroupError>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.groups.iter().fold(0.0, |m, g| m.max(g.max_rel_error))
    }

    /// True when every entry is within tolerance; vacuously true for an
    /// empty parameter set.
    pub fn passed(&self) -> bool {
        self.groups
            .iter()
            .all(|g| g.max_rel_error <= self.tolerance)
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares `analytic` (one matrix per parameter group) against central
/// differences `(f(θ+ε) − f(θ−ε)) / 2ε` taken entry by entry.
///
/// `params` is restored to its original values before returning. The
/// recommended step range is `(0, 1e-2]`; larger steps are accepted but
/// degrade the numeric estimate.
pub fn gradient_check<P, F>(
    params: &mut P,
    analytic: &[Matrix],
    mut loss: F,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport, AutodiffError>
where
    P: ParameterSet,
    F: FnMut(&P) -> f64,
{
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(AutodiffError::InvalidEpsilon(epsilon));
    }
    if analytic.len() != params.group_count() {
        return Err(AutodiffError::GradientCount {
            analytic: analytic.len(),
            groups: params.group_count(),
        });
    }
    let mut groups = Vec::with_capacity(params.group_count());
    for (gi, grad) in analytic.iter().enumerate() {
        if grad.shape() != params.group(gi).shape() {
            return Err(AutodiffError::shape(
                "gradient_check",
                grad.shape(),
                params.group(gi).shape(),
            ));
        }
        let mut worst = GroupError {
            name: params.group_name(gi),
            entries: grad.len(),
            max_rel_error: 0.0,
            worst_index: 0,
        };
        for k in 0..grad.len() {
            let original = params.group(gi).as_slice()[k];
            params.group_mut(gi).as_mut_slice()[k] = original + epsilon;
            let plus = loss(params);
            params.group_mut(gi).as_mut_slice()[k] = original - epsilon;
            let minus = loss(params);
            params.group_mut(gi).as_mut_slice()[k] = original;
            for value in [plus, minus] {
                if !value.is_finite() {
                    return Err(AutodiffError::NonFiniteLoss(value));
                }
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let err = relative_error(grad.as_slice()[k], numeric);
            if err > worst.max_rel_error {
                worst.max_rel_error = err;
                worst.worst_index = k;
            }
        }
        groups.push(worst);
    }
    Ok(GradCheckReport {
        epsilon,
        tolerance,
        groups,
    })
}
