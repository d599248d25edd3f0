use latflow::mc::{compare_u_k_integrals, RngSpec};
use latflow::Dimensions;
use nalgebra::{DMatrix, DVector};

fn main() {
    let dm = Dimensions::new(1, 1).unwrap();
    let spec = RngSpec::new(53, 0);
    let mut rng = spec.rng();
    use rand::Rng;
    use rand_distr::StandardNormal;
    let v = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
    let v = v.clone() / v.norm();
    let v = latflow::exterior::wedge(&[v]).unwrap();
    for (k, &t) in [1.0f64, 2.0, 3.0].iter().enumerate() {
        let cmp = compare_u_k_integrals(&v, dm, t, 1.0, &DMatrix::zeros(1, 1), 60_000, RngSpec::new(53, 2 * k as u64)).unwrap();
        println!("t={t}: ratio={:.4} +- {:.4}  box={:.5} rot={:.5}", cmp.ratio, cmp.ratio_stderr, cmp.box_side.mean, cmp.rotation_side.mean);
    }
    let far = DMatrix::from_element(1, 1, 4.0);
    let cf = compare_u_k_integrals(&v, dm, 2.0, 1.0, &far, 60_000, RngSpec::new(53, 9)).unwrap();
    let cn = compare_u_k_integrals(&v, dm, 2.0, 1.0, &DMatrix::zeros(1, 1), 60_000, RngSpec::new(53, 11)).unwrap();
    println!("far ratio={:.4}, near ratio={:.4}", cf.ratio, cn.ratio);
}
