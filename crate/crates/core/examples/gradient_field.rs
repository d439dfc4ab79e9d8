//! Writes the value and gradient of a smoothed program over a grid as CSV,
//! through the command-line driver.
//!
//! `cargo run --example gradient_field -- discont_g 5 field.csv`

fn main() {
    let mut args = std::env::args().skip(1);
    let program = args.next().unwrap_or_else(|| "discont_g".into());
    let h = args.next().unwrap_or_else(|| "5".into());
    let mut argv = vec![
        "smoothad".to_string(),
        "field".into(),
        "--program".into(),
        program,
        "--h".into(),
        h,
        "--resolution".into(),
        "9".into(),
    ];
    if let Some(out) = args.next() {
        argv.extend(["--output".into(), out]);
    }
    let code = smoothad::cli::run(argv, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
