//! Limited-memory BFGS with a backtracking Armijo line search.
//!
//! Accepted steps never increase the objective as measured by
//! [`Objective::delta`], so iterates are monotone even when the decrease is
//! below the rounding error of the objective value itself.

use std::collections::VecDeque;

pub(crate) trait Objective {
    /// Objective value at `x`; writes the gradient into `grad`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    /// `f(x_new) − f(x)`.
    fn delta(&self, x: &[f64], x_new: &[f64]) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Exit {
    /// The monitor asked to stop.
    Monitor,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub exit: Exit,
}

#[derive(Clone, Debug)]
pub(crate) struct Lbfgs {
    pub memory: usize,
    pub armijo: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Largest allowed change of any single coordinate per step.
    pub max_step: f64,
    /// Length of the very first (steepest-descent) step.
    pub initial_step: f64,
}

impl Default for Lbfgs {
    fn default() -> Self {
        Lbfgs {
            memory: 8,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
            max_step: 0.25,
            initial_step: 0.05,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `-H·g`.
fn direction(grad: &[f64], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alpha = vec![0.0; pairs.len()];
    for (i, p) in pairs.iter().enumerate().rev() {
        alpha[i] = p.rho * dot(&p.s, &q);
        q.iter_mut()
            .zip(&p.y)
            .for_each(|(qi, yi)| *qi -= alpha[i] * yi);
    }
    if let Some(last) = pairs.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (i, p) in pairs.iter().enumerate() {
        let beta = p.rho * dot(&p.y, &q);
        q.iter_mut()
            .zip(&p.s)
            .for_each(|(qi, si)| *qi += (alpha[i] - beta) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

impl Lbfgs {
    /// Minimizes from `x0`. `monitor` sees every accepted iterate (and the
    /// start point) with its value and gradient, and may stop the run.
    pub fn minimize<O, M>(&self, obj: &O, x0: Vec<f64>, max_iters: usize, mut monitor: M) -> Outcome
    where
        O: Objective,
        M: FnMut(&[f64], f64, &[f64]) -> Control,
    {
        let n = x0.len();
        let mut x = x0;
        let mut g = vec![0.0; n];
        let mut f = obj.value_grad(&x, &mut g);
        let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(self.memory);
        let mut iterations = 0;

        if monitor(&x, f, &g) == Control::Stop {
            return Outcome {
                x,
                iterations,
                exit: Exit::Monitor,
            };
        }

        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        while iterations < max_iters {
            let mut p = if pairs.is_empty() {
                let gn = norm(&g);
                g.iter().map(|v| -v * self.initial_step / gn).collect()
            } else {
                direction(&g, &pairs)
            };
            let mut slope = dot(&g, &p);
            if !(slope < 0.0) {
                pairs.clear();
                let gn = norm(&g);
                p = g.iter().map(|v| -v * self.initial_step / gn).collect();
                slope = dot(&g, &p);
            }

            let biggest = p.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let mut alpha = if biggest > self.max_step {
                self.max_step / biggest
            } else {
                1.0
            };

            let mut accepted = false;
            for _ in 0..self.max_backtracks {
                x_new
                    .iter_mut()
                    .zip(&x)
                    .zip(&p)
                    .for_each(|((xn, xi), pi)| *xn = xi + alpha * pi);
                let df = obj.delta(&x, &x_new);
                if df <= self.armijo * alpha * slope {
                    accepted = true;
                    break;
                }
                alpha *= self.shrink;
            }

            if !accepted {
                if pairs.is_empty() {
                    return Outcome {
                        x,
                        iterations,
                        exit: Exit::LineSearchFailed,
                    };
                }
                // Quasi-Newton model went bad; retry from steepest descent.
                pairs.clear();
                continue;
            }

            let f_new = obj.value_grad(&x_new, &mut g_new);
            iterations += 1;
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
                if pairs.len() == self.memory {
                    pairs.pop_front();
                }
                pairs.push_back(Pair {
                    s,
                    y,
                    rho: 1.0 / sy,
                });
            }
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut g, &mut g_new);
            f = f_new;
            if monitor(&x, f, &g) == Control::Stop {
                return Outcome {
                    x,
                    iterations,
                    exit: Exit::Monitor,
                };
            }
        }
        Outcome {
            x,
            iterations,
            exit: Exit::MaxIterations,
        }
    }
}
