use latflow::mc::{tail_moment_diagnostics, RngSpec};

fn main() {
    for (d, i) in [(2usize, 1usize), (3, 1), (3, 2), (4, 2)] {
        let diag = tail_moment_diagnostics(d, i, 1_000_000, &[2.0, 4.0, 8.0], 50, RngSpec::new(41, 0)).unwrap();
        println!("(d,i)=({d},{i}) slope={:.4} se={:.4}", diag.slope, diag.slope_stderr);
        let n = diag.n_samples as f64;
        for (l, c) in &diag.bins {
            println!("  shell {l}: count {c}  logp {:.4}", (*c as f64 / n).ln());
        }
    }
}
