use num_complex::Complex64;
use qmatfun::qdiffeq::*;
use qmatfun::qmatrix::ComplexMatrix;
use qmatfun::{QParameter, TruncationPolicy};

fn c(re: f64) -> Complex64 { Complex64::new(re, 0.0) }

fn main() {
    let qp = QParameter::real(0.5).unwrap();
    let outer_u1 = TruncationPolicy::new(1e-14, 1e-300, 300).unwrap();
    let outer_u2 = TruncationPolicy::new(1e-7, 1e-300, 10_000).unwrap();
    use rand::SeedableRng;
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7u64.wrapping_add(2));
    let dims = [2usize, 3];
    for i in 0..4 {
        let dim = dims[i % 2];
        let offgrid = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64, dim: usize| -> Vec<f64> {
            (0..dim).map(|_| loop {
                let x = rng.gen_range(lo..hi);
                if (x - x.round()).abs() > 0.05 { break x; }
            }).collect()
        };
        let sd = offgrid(&mut rng, 0.4, 1.0, dim);
        let gd = offgrid(&mut rng, 0.5, 1.1, dim);
        let s = ComplexMatrix::diagonal_re(&sd);
        let td: Vec<f64> = sd.iter().zip(&gd).map(|(a, b)| a + b).collect();
        let t = ComplexMatrix::diagonal_re(&td);
        println!("draw {i}: dim={dim} S={sd:?} T={td:?}");
        let coeffs = kummer_coeffs_bilateral(&s, &t, &qp);
        let u1 = |z: Complex64| integral_solution_u1(&s, &t, &qp, z, &outer_u1).map(|r| r.value);
        for &z in &[0.4, 0.7] {
            match bilateral_residual(&coeffs, &u1, c(z), qp.q()) {
                Ok(r) => println!("  U1 z={z}: residual {:.3e}", r.fro_norm()),
                Err(e) => println!("  U1 z={z}: ERROR {e}"),
            }
        }
        let u2 = |z: Complex64| integral_solution_u2(&s, &t, &qp, z, 30, 60, &outer_u2).map(|r| r.value);
        match bilateral_residual(&coeffs, &u2, c(1.5), qp.q()) {
            Ok(r) => println!("  U2 z=1.5: residual {:.3e}", r.fro_norm()),
            Err(e) => println!("  U2 z=1.5: ERROR {e}"),
        }
    }
}
