//! Lag windows, their smoothness constants and the lugsail transform.
//!
//! cargo run --example lag_windows

use mcse::spectral::{lugsail_window, window_smoothness, window_value};
use mcse::LagWindow;

fn main() -> mcse::Result<()> {
    let windows = vec![
        LagWindow::Bartlett,
        LagWindow::BartlettFlatTop,
        LagWindow::TukeyHanning,
        LagWindow::QuadraticSpectral,
        lugsail_window(LagWindow::Bartlett, 2.0, 0.5)?,
    ];
    print!("{:>30}", "x");
    for x in [0.0, 0.25, 0.5, 0.75, 1.0, 1.5] {
        print!("{x:>8.2}");
    }
    println!("     q   k_q");
    for w in &windows {
        print!("{:>30}", w.name());
        for x in [0.0, 0.25, 0.5, 0.75, 1.0, 1.5] {
            print!("{:>8.3}", window_value(w, x));
        }
        let sm = window_smoothness(w);
        println!("   {:>3} {:>6.3}", sm.q, sm.k_q);
    }
    Ok(())
}
