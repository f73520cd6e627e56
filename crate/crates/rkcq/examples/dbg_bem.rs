use num_complex::Complex64;
use rkcq::bem::{assemble_operators_with_order, TraceSpaces};
use rkcq::fem::build_box_mesh;

fn main() {
    let m = build_box_mesh([0.0; 3], 2.0, 2).unwrap().surface;
    let spaces = TraceSpaces::new(&m);
    let s = Complex64::new(1.5, 1.0);
    let orders = [4usize, 6, 8, 10, 12];
    let ops: Vec<_> = orders
        .iter()
        .map(|&o| assemble_operators_with_order(&m, &spaces, s, o).unwrap())
        .collect();
    let scale = ops.last().unwrap().v.max_abs();
    for w in 0..orders.len() - 1 {
        let d = ops[w].v.sub(&ops[w + 1].v);
        // locate max
        let mut mx = 0.0; let mut arg = (0, 0);
        for i in 0..d.rows() { for j in 0..d.cols() {
            if d[(i,j)].norm() > mx { mx = d[(i,j)].norm(); arg = (i,j); }
        }}
        let rel = mx / scale;
        let relation = m.relation(arg.0, arg.1).0;
        println!("order {} -> {}: max rel diff {rel:.3e} at {:?} ({:?})", orders[w], orders[w+1], arg, relation);
    }
    // check im part of fundamental solution
    let v = rkcq::bem::fundamental_solution_3d([0.0;3], [1.0,0.0,0.0], Complex64::new(1.0,0.0)).unwrap();
    println!("phi = {:?} im.abs()={:e}", v, v.im.abs());
}
