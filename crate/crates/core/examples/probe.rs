fn main() {
    let a = [0.9999895900083067f64, 0.0003459119496855359, 0.006572327044025161];
    let da = [0.0031547169811320776f64, -0.00024905660377358576, 2.0];
    let m = nalgebra::Matrix4x3::new(
        a[0], a[1], a[2],
        0.0, -da[0], -da[1],
        da[0], 0.0, -da[2],
        da[1], da[2], 0.0,
    );
    let rhs = nalgebra::Vector4::new(1.0, 0.0, 0.0, 0.0);
    let svd = m.svd(true, true);
    println!("singular values: {:?}", svd.singular_values.as_slice());
    let sol = svd.solve(&rhs, 1e-14).unwrap();
    println!("sol = {:?}", sol.as_slice());
    let res = m * sol - rhs;
    println!("residual = {:.3e}", res.norm());
    // pseudo-inverse route
    let pinv = svd.pseudo_inverse(1e-13).unwrap();
    let sol3 = pinv * rhs;
    let res3 = m * sol3 - rhs;
    println!("pinv residual = {:.3e}", res3.norm());
}
