use dva_core::currents::*;
use dva_core::fock::{BasisState, Sector};
use dva_core::*;
fn main() {
    let p = Params::new(0.6, C64::new(2.3, 0.4), C64::new(2.7, 0.0)).unwrap().with_l_level(2);
    let one = C64::new(1.0, 0.0);
    let d1 = Factor::new(lambda_dv1(&p), 0, one);
    let d2 = Factor::new(lambda_dv2(&p), 0, one);
    let zf = Factor::new(zcal(&p), 0, one);
    for m in 1..=6 {
        println!(
            "m={m}: C(dv1,z)={:e} C(dv2,z)={:e} C(z,dv1)={:e}",
            contraction_log_coeff(&d1, &zf, m, &p).norm(),
            contraction_log_coeff(&d2, &zf, m, &p).norm(),
            contraction_log_coeff(&zf, &d1, m, &p).norm()
        );
    }
    let opts = MeOpts::new(40, 8);
    let vac = BasisState::vacuum(Sector::new(0, 0));
    let w1 = matrix_element_word(&[d1.clone(), zf.clone()], &vac, &vac, &p, opts);
    println!("dv1*z vac window const: {}", w1.get([0; 4]));
    let w2 = matrix_element_word(&[d2.clone(), zf.clone()], &vac, &vac, &p, opts);
    println!("dv2*z vac window const: {}", w2.get([0; 4]));
}
