use polywg::study::*;

fn main() {
    for (k, lv) in [(1u32, 7u32), (2, 6), (2, 7)] {
        let cfg = format!("family = triangular\nlevels = {lv}\nk = {k}\nrho_list = 1\nsolution = u1\n");
        let c = ExperimentConfig::parse(&cfg).unwrap();
        let t0 = std::time::Instant::now();
        let out = run(&c).unwrap();
        let r = &out.rows[0].report;
        println!(
            "k={k} G{lv}: dofs {} l2 {:.3e} grad {:.3e} assemble+solve in {:?} (solve {:.0} ms)",
            r.dofs, r.l2_error, r.weighted_grad_error, t0.elapsed(), r.solve_ms
        );
    }
}
