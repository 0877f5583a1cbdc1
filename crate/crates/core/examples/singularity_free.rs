//! A reference angle sweeping through +-180 deg while the state trails or
//! leads it. Every reset keeps the represented pose and the tracking error
//! continuous.
//!
//! ```bash
//! cargo run --example singularity_free
//! ```

use pwa_rendezvous::wrap::{angle_diff, reference_direction, wrap_angle, WrapChannel};

fn main() -> pwa_rendezvous::Result<()> {
    let deg = f64::to_radians;
    let step = deg(0.3);
    for (rate, offset) in [(step, -deg(2.0)), (step, deg(2.0)), (-step, deg(2.0)), (-step, -deg(2.0))] {
        let mut ch = WrapChannel::new(1.0, deg(0.5))?;
        let raw = |k: usize| wrap_angle(deg(150.0) * rate.signum() + rate * k as f64);
        let mut x = raw(0) + offset;
        let mut worst_jump: f64 = 0.0;
        let mut last: Option<f64> = None;
        for k in 0..400 {
            let mut xd: Vec<f64> = (0..5).map(|i| raw(k + i)).collect();
            let orig = xd.clone();
            let out = ch.wrap_step(x, &mut xd, reference_direction(&orig))?;
            if let Some(ev) = out.event {
                println!(
                    "step {k:3}: branch {} ({}), state {:8.3} -> {:8.3} deg",
                    ev.branch.label(),
                    ev.branch.as_str(),
                    ev.x_before.to_degrees(),
                    ev.x_after.to_degrees()
                );
            }
            let err = xd[0] - out.x;
            if let Some(prev) = last {
                worst_jump = worst_jump.max((err - prev).abs());
            }
            last = Some(err);
            x = out.x + angle_diff(orig[1], orig[0]);
        }
        println!("  largest step-to-step error change {:.4} deg\n", worst_jump.to_degrees());
    }
    Ok(())
}
