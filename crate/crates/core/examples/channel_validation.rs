//! The closed-form output messages `(e, h)` and gain moments `(k, l)` are
//! derivatives of the sensor's generating function. Check by finite
//! differences of its numerical integral.

use camp::{gain_ct, gain_posterior_moments, numeric_g, product_eh, UniformGainPrior};
use ndarray::{array, Array1};

fn main() -> camp::Result<()> {
    let prior = UniformGainPrior::new(1.1, 0.02)?;
    let y = array![[0.9, -1.4, 0.3]];
    let omega = array![[1.0, -1.5, 0.4]];
    let v = array![[0.2, 0.5, 0.1]];
    let delta = 0.01;

    let (c2, t) = gain_ct(&y, &omega, &v, delta)?;
    let g = gain_posterior_moments(&prior, 3, c2[0], t[0])?;
    let (e, h) = product_eh(
        &y,
        &omega,
        &v,
        &Array1::from_elem(1, g.k),
        &Array1::from_elem(1, g.l),
        delta,
    )?;
    println!("C^2 = {:.5}, T = {:.5}, k = {:.6}, l = {:.3e}", c2[0], t[0], g.k, g.l);

    let nodes = 20_001;
    let big_g = |w: &ndarray::Array2<f64>, theta: f64| {
        numeric_g(y.row(0), w.row(0), v.row(0), theta, &prior, delta, nodes)
    };
    let g0 = big_g(&omega, 0.0)?;
    let (h1, h2) = (1e-5, 1e-4);
    for l in 0..3 {
        let at = |s: f64| {
            let mut w = omega.clone();
            w[[0, l]] += s;
            big_g(&w, 0.0)
        };
        let d1 = (at(h1)? - at(-h1)?) / (2.0 * h1);
        let d2 = (at(h2)? - 2.0 * g0 + at(-h2)?) / (h2 * h2);
        println!(
            "l={l}: e = {:+.6} vs {:+.6}   h = {:.6} vs {:.6}",
            e[[0, l]],
            d1,
            h[[0, l]],
            -d2
        );
    }
    let dk = (big_g(&omega, h1)? - big_g(&omega, -h1)?) / (2.0 * h1);
    let dl = (big_g(&omega, h2)? - 2.0 * g0 + big_g(&omega, -h2)?) / (h2 * h2);
    println!("k = {:.6} vs {:.6}   l = {:.3e} vs {:.3e}", g.k, dk, g.l, dl);
    Ok(())
}
