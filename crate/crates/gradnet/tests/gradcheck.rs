//! Gradient checks: every primitive's backward rule against the
//! central-difference oracle, plus the adjoint, causality, linearity and
//! determinism properties.

use gradnet::fdcheck::{central_diff, max_rel_err};
use gradnet::{Graph, GradnetError, NodeId, Tensor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Check analytic gradients of `build` (params bound in order) against
/// central differences over the concatenation of all parameters.
fn check<F>(name: &str, params: &[Tensor], tol: f64, build: F)
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId, GradnetError>,
{
    let run = |flat: &[f64]| -> f64 {
        let mut g = Graph::new();
        let mut offset = 0;
        let ids: Vec<NodeId> = params
            .iter()
            .map(|p| {
                let t =
                    Tensor::from_vec(p.shape(), flat[offset..offset + p.len()].to_vec()).unwrap();
                offset += p.len();
                g.input(t)
            })
            .collect();
        let loss = build(&mut g, &ids).unwrap();
        g.value(loss).item()
    };

    let flat: Vec<f64> = params.iter().flat_map(|p| p.data().iter().copied()).collect();
    let numeric = central_diff(run, &flat, 1e-5);

    let mut g = Graph::new();
    let ids: Vec<NodeId> =
        params.iter().enumerate().map(|(i, p)| g.param(i, p)).collect();
    let loss = build(&mut g, &ids).unwrap();
    let grads = g.backward(loss, params.len()).unwrap();
    let analytic: Vec<f64> = grads
        .iter()
        .zip(params)
        .flat_map(|(go, p)| match go {
            Some(t) => t.data().to_vec(),
            None => vec![0.0; p.len()],
        })
        .collect();

    let err = max_rel_err(&analytic, &numeric);
    assert!(err < tol, "{name}: max rel err {err:.3e} >= {tol:.0e}");
}

/// Push values away from a kink at `k` so finite differences stay valid.
fn away_from(mut t: Tensor, k: f64, margin: f64) -> Tensor {
    for v in t.data_mut() {
        if (*v - k).abs() < margin {
            *v = k + margin * if *v >= k { 1.0 } else { -1.0 };
        }
    }
    t
}

#[test]
fn fd_elementwise_ops() {
    let mut r = rng(11);
    let a = rand_tensor(&mut r, &[7], -2.0, 2.0);
    let b = rand_tensor(&mut r, &[7], -2.0, 2.0);
    let t = rand_tensor(&mut r, &[7], -1.0, 1.0);

    let pair = [a.clone(), b.clone()];
    check("add", &pair, 1e-6, |g, ids| {
        let y = g.add(ids[0], ids[1])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
    check("sub", &pair, 1e-6, |g, ids| {
        let y = g.sub(ids[0], ids[1])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
    check("mul", &pair, 1e-6, |g, ids| {
        let y = g.mul(ids[0], ids[1])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
    check("neg", &[a.clone()], 1e-6, |g, ids| {
        let y = g.neg(ids[0])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
    check("scale", &[a.clone()], 1e-6, |g, ids| {
        let y = g.scale(ids[0], -1.7)?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
    check("add_scalar", &[a.clone()], 1e-6, |g, ids| {
        let y = g.add_scalar(ids[0], 0.31)?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });

    // min2 ties/kinks: keep the two inputs separated.
    let b_sep = {
        let mut b2 = b.clone();
        for (x, y) in b2.data_mut().iter_mut().zip(a.data()) {
            if (*x - *y).abs() < 1e-3 {
                *x += 0.1;
            }
        }
        b2
    };
    check("min2", &[a.clone(), b_sep], 1e-6, |g, ids| {
        let y = g.min2(ids[0], ids[1])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
}

#[test]
fn fd_nonlinearities() {
    let mut r = rng(12);
    let x = away_from(rand_tensor(&mut r, &[9], -2.0, 2.0), 0.0, 1e-3);
    let t = rand_tensor(&mut r, &[9], -1.0, 1.0);

    check("relu", &[x.clone()], 1e-6, |g, ids| {
        let y = g.relu(ids[0])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
    check("sigmoid", &[x.clone()], 1e-6, |g, ids| {
        let y = g.sigmoid(ids[0])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
    check("tanh", &[x.clone()], 1e-6, |g, ids| {
        let y = g.tanh_(ids[0])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
    check("exp", &[x.clone()], 1e-6, |g, ids| {
        let y = g.exp(ids[0])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });

    let pos = rand_tensor(&mut r, &[9], 0.2, 3.0);
    check("ln", &[pos], 1e-6, |g, ids| {
        let y = g.ln(ids[0])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });

    // clamp: keep inputs off the clamp boundaries.
    let mut c = rand_tensor(&mut r, &[9], -2.0, 2.0);
    for v in c.data_mut() {
        if (v.abs() - 1.0).abs() < 1e-2 {
            *v *= 1.1;
        }
    }
    check("clamp", &[c], 1e-6, |g, ids| {
        let y = g.clamp(ids[0], -1.0, 1.0)?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
}

#[test]
fn fd_linear_algebra() {
    let mut r = rng(13);
    let x1 = rand_tensor(&mut r, &[5], -1.0, 1.0);
    let x2 = rand_tensor(&mut r, &[3, 5], -1.0, 1.0);
    let w = rand_tensor(&mut r, &[5, 4], -1.0, 1.0);
    let bias = rand_tensor(&mut r, &[4], -1.0, 1.0);
    let t1 = rand_tensor(&mut r, &[4], -1.0, 1.0);
    let t2 = rand_tensor(&mut r, &[3, 4], -1.0, 1.0);

    check("matmul vec", &[x1.clone(), w.clone()], 1e-6, |g, ids| {
        let y = g.matmul(ids[0], ids[1])?;
        let tt = g.input(t1.clone());
        g.mse(y, tt)
    });
    check("matmul mat", &[x2.clone(), w.clone()], 1e-6, |g, ids| {
        let y = g.matmul(ids[0], ids[1])?;
        let tt = g.input(t2.clone());
        g.mse(y, tt)
    });
    check("bias_row", &[x2.clone(), bias.clone()], 1e-6, |g, ids| {
        let w_in = g.input(w.clone());
        let y = g.matmul(ids[0], w_in)?;
        let y = g.bias_row(y, ids[1])?;
        let tt = g.input(t2.clone());
        g.mse(y, tt)
    });
    check("dense full", &[x2, w, bias], 1e-6, |g, ids| {
        let y = g.dense(ids[0], ids[1], ids[2])?;
        let y = g.tanh_(y)?;
        let tt = g.input(t2.clone());
        g.mse(y, tt)
    });
}

#[test]
fn fd_shape_ops() {
    let mut r = rng(14);
    let a = rand_tensor(&mut r, &[4], -1.0, 1.0);
    let b = rand_tensor(&mut r, &[6], -1.0, 1.0);
    let t10 = rand_tensor(&mut r, &[10], -1.0, 1.0);
    check("concat", &[a, b], 1e-6, |g, ids| {
        let y = g.concat(ids[0], ids[1])?;
        let tt = g.input(t10.clone());
        g.mse(y, tt)
    });

    let m1 = rand_tensor(&mut r, &[3, 2], -1.0, 1.0);
    let m2 = rand_tensor(&mut r, &[3, 4], -1.0, 1.0);
    let t36 = rand_tensor(&mut r, &[3, 6], -1.0, 1.0);
    check("concat_cols", &[m1, m2], 1e-6, |g, ids| {
        let y = g.concat_cols(ids[0], ids[1])?;
        let tt = g.input(t36.clone());
        g.mse(y, tt)
    });

    let x = rand_tensor(&mut r, &[12], -1.0, 1.0);
    let t = rand_tensor(&mut r, &[3, 4], -1.0, 1.0);
    check("reshape", &[x], 1e-6, |g, ids| {
        let y = g.reshape(ids[0], &[3, 4])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });

    let fm = rand_tensor(&mut r, &[5, 7], -1.0, 1.0);
    let t5 = rand_tensor(&mut r, &[5], -1.0, 1.0);
    check("last_col", &[fm], 1e-6, |g, ids| {
        let y = g.last_col(ids[0])?;
        let tt = g.input(t5.clone());
        g.mse(y, tt)
    });

    let m = rand_tensor(&mut r, &[4, 3], -1.0, 1.0);
    let tm = rand_tensor(&mut r, &[4, 1], -1.0, 1.0);
    check("sum_rows", &[m], 1e-6, |g, ids| {
        let y = g.sum_rows(ids[0])?;
        let tt = g.input(tm.clone());
        g.mse(y, tt)
    });
}

#[test]
fn fd_convolutions() {
    let mut r = rng(15);

    let x = rand_tensor(&mut r, &[2, 6, 6], -1.0, 1.0);
    let k = rand_tensor(&mut r, &[3, 2, 2, 2], -1.0, 1.0);
    let bias = rand_tensor(&mut r, &[3], -1.0, 1.0);
    for stride in [1usize, 2] {
        let oh = (6 - 2) / stride + 1;
        let t = rand_tensor(&mut r, &[3, oh, oh], -1.0, 1.0);
        check(
            &format!("conv2d s{stride}"),
            &[x.clone(), k.clone(), bias.clone()],
            1e-5,
            |g, ids| {
                let y = g.conv2d(ids[0], ids[1], stride)?;
                let y = g.bias_ch(y, ids[2])?;
                let tt = g.input(t.clone());
                g.mse(y, tt)
            },
        );
    }

    let xt = rand_tensor(&mut r, &[3, 3, 3], -1.0, 1.0);
    let kt = rand_tensor(&mut r, &[3, 2, 2, 2], -1.0, 1.0);
    for stride in [1usize, 2] {
        let oh = (3 - 1) * stride + 2;
        let t = rand_tensor(&mut r, &[2, oh, oh], -1.0, 1.0);
        check(
            &format!("conv_transpose2d s{stride}"),
            &[xt.clone(), kt.clone()],
            1e-5,
            |g, ids| {
                let y = g.conv_transpose2d(ids[0], ids[1], stride)?;
                let tt = g.input(t.clone());
                g.mse(y, tt)
            },
        );
    }

    let xc = rand_tensor(&mut r, &[2, 10], -1.0, 1.0);
    let kc = rand_tensor(&mut r, &[3, 2, 2], -1.0, 1.0);
    for dilation in [1usize, 4] {
        let t = rand_tensor(&mut r, &[3, 10], -1.0, 1.0);
        check(
            &format!("causal_conv1d d{dilation}"),
            &[xc.clone(), kc.clone()],
            1e-5,
            |g, ids| {
                let y = g.causal_conv1d(ids[0], ids[1], dilation)?;
                let tt = g.input(t.clone());
                g.mse(y, tt)
            },
        );
    }
}

#[test]
fn fd_l2_normalize_random_64() {
    let mut r = rng(16);
    let x = rand_tensor(&mut r, &[64], -1.0, 1.0);
    let t = rand_tensor(&mut r, &[64], -1.0, 1.0);
    check("l2_normalize", &[x], 1e-4, |g, ids| {
        let y = g.l2_normalize(ids[0])?;
        let tt = g.input(t.clone());
        g.mse(y, tt)
    });
}

#[test]
fn fd_reductions() {
    let mut r = rng(17);
    let a = rand_tensor(&mut r, &[3, 4], -1.0, 1.0);
    let b = rand_tensor(&mut r, &[3, 4], -1.0, 1.0);
    check("mse", &[a.clone(), b], 1e-6, |g, ids| g.mse(ids[0], ids[1]));
    check("sum", &[a.clone()], 1e-6, |g, ids| {
        let s = g.sum(ids[0])?;
        g.mul(s, s)
    });
    check("mean", &[a], 1e-6, |g, ids| {
        let s = g.mean(ids[0])?;
        g.mul(s, s)
    });
}

#[test]
fn conv_adjoint_identity() {
    // <conv2d(x, k), y> == <x, conv_transpose2d(y, k)> for the same kernel
    // tensor (its first two dims swap roles between the two ops).
    let mut r = rng(21);
    for stride in [1usize, 2] {
        let x = rand_tensor(&mut r, &[3, 6, 6], -1.0, 1.0);
        let k = rand_tensor(&mut r, &[4, 3, 2, 2], -1.0, 1.0);
        let oh = (6 - 2) / stride + 1;
        let y = rand_tensor(&mut r, &[4, oh, oh], -1.0, 1.0);

        let mut g = Graph::new();
        let xn = g.input(x.clone());
        let kn = g.input(k.clone());
        let yn = g.input(y.clone());
        let cx = g.conv2d(xn, kn, stride).unwrap();
        let ty = g.conv_transpose2d(yn, kn, stride).unwrap();

        let lhs: f64 =
            g.value(cx).data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 =
            g.value(ty).data().iter().zip(x.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10, "stride {stride}: {lhs} vs {rhs}");
    }
}

#[test]
fn causal_conv_ignores_future() {
    let mut r = rng(22);
    let x = rand_tensor(&mut r, &[3, 20], -1.0, 1.0);
    let k = rand_tensor(&mut r, &[2, 3, 2], -1.0, 1.0);
    let dilation = 3;

    let base = {
        let mut g = Graph::new();
        let xn = g.input(x.clone());
        let kn = g.input(k.clone());
        let y = g.causal_conv1d(xn, kn, dilation).unwrap();
        g.value(y).clone()
    };

    for t in 0..20 {
        for ch in 0..3 {
            let mut xp = x.clone();
            xp.data_mut()[ch * 20 + t] += 1.0;
            let mut g = Graph::new();
            let xn = g.input(xp);
            let kn = g.input(k.clone());
            let y = g.causal_conv1d(xn, kn, dilation).unwrap();
            let out = g.value(y);
            for oc in 0..2 {
                for s in 0..t {
                    assert_eq!(
                        out.data()[oc * 20 + s].to_bits(),
                        base.data()[oc * 20 + s].to_bits(),
                        "perturbing (ch {ch}, t {t}) changed output at (oc {oc}, s {s})"
                    );
                }
            }
        }
    }
}

#[test]
fn backward_determinism() {
    let mut r = rng(23);
    let x = rand_tensor(&mut r, &[4, 8], -1.0, 1.0);
    let w = rand_tensor(&mut r, &[8, 8], -0.5, 0.5);
    let b = rand_tensor(&mut r, &[8], -0.5, 0.5);
    let t = rand_tensor(&mut r, &[4, 8], -1.0, 1.0);

    let run = || {
        let mut g = Graph::new();
        let wn = g.param(0, &w);
        let bn = g.param(1, &b);
        let xn = g.input(x.clone());
        let h = g.dense(xn, wn, bn).unwrap();
        let h = g.tanh_(h).unwrap();
        let h2 = g.dense(h, wn, bn).unwrap();
        let tn = g.input(t.clone());
        let loss = g.mse(h2, tn).unwrap();
        g.backward(loss, 2).unwrap()
    };

    let g1 = run();
    let g2 = run();
    for (a, b) in g1.iter().zip(&g2) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        for (x, y) in a.data().iter().zip(b.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

mod linearity {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn backward_is_linear_in_loss_scale(
            seed in 0u64..1000,
            a in prop_oneof![Just(-3.0), Just(-0.5), Just(0.25), Just(2.0), Just(10.0)],
        ) {
            let mut r = rng(seed);
            let x = rand_tensor(&mut r, &[6], -1.0, 1.0);
            let w = rand_tensor(&mut r, &[6, 3], -1.0, 1.0);
            let b = rand_tensor(&mut r, &[3], -1.0, 1.0);
            let t = rand_tensor(&mut r, &[3], -1.0, 1.0);

            let grads_of = |scale_loss: Option<f64>| {
                let mut g = Graph::new();
                let wn = g.param(0, &w);
                let bn = g.param(1, &b);
                let xn = g.input(x.clone());
                let h = g.dense(xn, wn, bn).unwrap();
                let h = g.tanh_(h).unwrap();
                let tn = g.input(t.clone());
                let mut loss = g.mse(h, tn).unwrap();
                if let Some(s) = scale_loss {
                    loss = g.scale(loss, s).unwrap();
                }
                g.backward(loss, 2).unwrap()
            };

            let base = grads_of(None);
            let scaled = grads_of(Some(a));
            for (gb, gs) in base.iter().zip(&scaled) {
                let (gb, gs) = (gb.as_ref().unwrap(), gs.as_ref().unwrap());
                for (x, y) in gb.data().iter().zip(gs.data()) {
                    let expect = a * x;
                    prop_assert!(
                        (expect - y).abs() <= 1e-12 * expect.abs().max(y.abs()).max(1e-300),
                        "a*dg {} vs d(a*g) {}", expect, y
                    );
                }
            }
        }
    }
}
