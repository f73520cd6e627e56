use num_complex::Complex64;
use rkcq::linalg::inverse_contour_stack;

fn c(re: f64, im: f64) -> Complex64 { Complex64::new(re, im) }

// one-stage delta(z) = (a + z/(1-z) b)^{-1}
fn delta(a: f64, b: f64, z: Complex64) -> Complex64 {
    (c(a,0.0) + z/(c(1.0,0.0)-z)*b).inv()
}

fn series_delta_over_k(a: f64, b: f64, k: f64, len: usize) -> Vec<Complex64> {
    let num = [c(1.0,0.0), c(-1.0,0.0)];
    let den = [c(k*a,0.0), c(k*(b-a),0.0)];
    let mut out = vec![Complex64::ZERO; len];
    for n in 0..len {
        let mut acc = if n < 2 { num[n] } else { Complex64::ZERO };
        if n >= 1 { acc -= den[1]*out[n-1]; }
        out[n] = acc/den[0];
    }
    out
}
fn square(s: &[Complex64]) -> Vec<Complex64> {
    let n = s.len(); let mut o = vec![Complex64::ZERO; n];
    for i in 0..n { for j in 0..n-i { o[i+j] += s[i]*s[j]; } }
    o
}
fn recip(s: &[Complex64]) -> Vec<Complex64> {
    let n = s.len(); let mut o = vec![Complex64::ZERO; n];
    o[0] = s[0].inv();
    for k in 1..n { let mut a = Complex64::ZERO; for j in 1..=k { a += s[j]*o[k-j]; } o[k] = -a/s[0]; }
    o
}

fn main() {
    let k: f64 = 0.05; let n_steps = 64usize; let q = n_steps;
    let eps = 2.0f64.powi(-52);
    let lam_eps = eps.powf(1.0/(2.0*(q as f64+1.0)));
    let lam_k = k.powf(3.0/(q as f64+1.0));
    println!("lam_eps={lam_eps:.6} lam_k={lam_k:.6}");
    for (name, a, b) in [("radau1", 1.0, 1.0), ("gauss1", 0.5, 1.0)] {
        for lam in [lam_eps, lam_eps.max(lam_k)] {
            let base = series_delta_over_k(a, b, k, n_steps+1);
            for (fname, f) in [
                ("s", Box::new(|s: Complex64| s) as Box<dyn Fn(Complex64)->Complex64>),
                ("s^2", Box::new(|s: Complex64| s*s)),
                ("1/s", Box::new(|s: Complex64| s.inv())),
            ] {
                let exact: Vec<Complex64> = match fname {
                    "s" => base.clone(), "s^2" => square(&base), _ => recip(&base),
                };
                let mut stack = vec![Complex64::ZERO; q+1];
                for l in 0..=q {
                    let ang = -2.0*std::f64::consts::PI*l as f64/(q as f64+1.0);
                    let z = lam*c(ang.cos(), ang.sin());
                    stack[l] = f(delta(a,b,z)/k);
                }
                inverse_contour_stack(&mut stack, q+1, 1, lam);
                let mut maxdev = 0.0f64; let mut argmax = 0;
                for n in 0..=n_steps {
                    let d = (stack[n]-exact[n]).norm();
                    if d > maxdev { maxdev = d; argmax = n; }
                }
                println!("{name} lam={lam:.4} F={fname}: maxdev {maxdev:.3e} at n={argmax}");
            }
        }
    }
}
