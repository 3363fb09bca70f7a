//! Trajectory export: the CSV schema and a gnuplot script that regenerates
//! the standard panels from it.
//!
//! CSV columns, in order: `t, x1..x3, v1..v3, R11..R33` (row-major),
//! `W1..W3`, then per link `q{i}1..q{i}3, w{i}1..w{i}3` for `i = 1..n`,
//! then `f, M1..M3, e_q, e_w, Psi, eR_norm, eW_norm, E, V_lyap`.
//! Values are written with Rust's shortest round-trip `f64` formatting, so
//! re-parsing reproduces them bit for bit; `V_lyap` is `NaN` for runs
//! without the integral term.

use chainquad_core::sim::TrajectoryLog;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Header line for an `n`-link log.
pub fn csv_header(n: usize) -> String {
    let mut h = String::from("t,x1,x2,x3,v1,v2,v3");
    for r in 1..=3 {
        for c in 1..=3 {
            let _ = write!(h, ",R{r}{c}");
        }
    }
    h.push_str(",W1,W2,W3");
    for i in 1..=n {
        let _ = write!(h, ",q{i}1,q{i}2,q{i}3,w{i}1,w{i}2,w{i}3");
    }
    h.push_str(",f,M1,M2,M3,e_q,e_w,Psi,eR_norm,eW_norm,E,V_lyap");
    h
}

/// Number of columns for an `n`-link log.
pub fn csv_column_count(n: usize) -> usize {
    1 + 3 + 3 + 9 + 3 + 6 * n + 1 + 3 + 5 + 1 + 1
}

pub fn write_csv(log: &TrajectoryLog, path: &Path) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", csv_header(log.n))?;
    let mut line = String::new();
    for s in &log.samples {
        line.clear();
        let _ = write!(line, "{}", s.t);
        for v in s.state.position.iter().chain(s.state.velocity.iter()) {
            let _ = write!(line, ",{v}");
        }
        let r = s.state.attitude.matrix();
        for row in 0..3 {
            for col in 0..3 {
                let _ = write!(line, ",{}", r[(row, col)]);
            }
        }
        for v in s.state.body_rate.iter() {
            let _ = write!(line, ",{v}");
        }
        for i in 0..log.n {
            for v in s.state.link_dirs[i].vector().iter() {
                let _ = write!(line, ",{v}");
            }
            for v in s.state.link_rates[i].iter() {
                let _ = write!(line, ",{v}");
            }
        }
        let _ = write!(line, ",{}", s.thrust);
        for v in s.moment.iter() {
            let _ = write!(line, ",{v}");
        }
        let _ = write!(
            line,
            ",{},{},{},{},{},{},{}",
            s.e_q,
            s.e_w,
            s.psi,
            s.e_r_norm,
            s.e_omega_norm,
            s.energy,
            s.lyap.unwrap_or(f64::NAN)
        );
        writeln!(out, "{line}")?;
    }
    out.flush()
}

/// Parses a CSV produced by [`write_csv`]; returns the header fields and the
/// numeric rows. `NaN` cells parse as NaN.
pub fn read_csv(path: &Path) -> std::io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap_or_default()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    Ok((header, rows))
}

/// Writes a gnuplot command file that renders the standard panels (position,
/// link errors, attitude error, inputs, energy and the composite Lyapunov
/// value) from `csv_name`, assumed to sit next to the script.
pub fn write_plot_script(path: &Path, csv_name: &str, n: usize) -> std::io::Result<()> {
    // 1-based column positions: t | x(3) | v(3) | R(9) | W(3) = 19, links after.
    let q_last = 20 + 6 * (n - 1);
    let f_col = 20 + 6 * n;
    let eq_col = f_col + 4;
    let script = format!(
        r#"# gnuplot script; run from this directory:  gnuplot plot.gp
set datafile separator ','
set terminal pngcairo size 1400,900
set key autotitle columnhead
set grid

set output 'position.png'
set title 'Quadrotor position'
set xlabel 't [s]'; set ylabel 'x [m]'
plot '{csv}' using 1:2 with lines title 'x1', \
     '' using 1:3 with lines title 'x2', \
     '' using 1:4 with lines title 'x3'

set output 'link_errors.png'
set title 'Link direction and rate errors'
set xlabel 't [s]'; set ylabel 'error'
plot '{csv}' using 1:{eq} with lines title 'e_q', \
     '' using 1:{ew} with lines title 'e_w'

set output 'attitude.png'
set title 'Attitude error function and tracking errors'
set xlabel 't [s]'; set ylabel 'error'
plot '{csv}' using 1:{psi} with lines title 'Psi', \
     '' using 1:{ern} with lines title '|e_R|', \
     '' using 1:{ewn} with lines title '|e_W|'

set output 'inputs.png'
set title 'Thrust and moment'
set xlabel 't [s]'
plot '{csv}' using 1:{f} with lines title 'f [N]', \
     '' using 1:{m1} with lines title 'M1 [Nm]', \
     '' using 1:{m2} with lines title 'M2 [Nm]', \
     '' using 1:{m3} with lines title 'M3 [Nm]'

set output 'payload_swing.png'
set title 'Last link direction'
set xlabel 't [s]'; set ylabel 'q_n components'
plot '{csv}' using 1:{qn1} with lines title 'qn1', \
     '' using 1:{qn2} with lines title 'qn2', \
     '' using 1:{qn3} with lines title 'qn3'

set output 'energy_lyapunov.png'
set title 'Energy and composite Lyapunov value'
set xlabel 't [s]'
plot '{csv}' using 1:{e} with lines title 'E [J]', \
     '' using 1:{v} with lines title 'V'
"#,
        csv = csv_name,
        eq = eq_col,
        ew = eq_col + 1,
        psi = eq_col + 2,
        ern = eq_col + 3,
        ewn = eq_col + 4,
        f = f_col,
        m1 = f_col + 1,
        m2 = f_col + 2,
        m3 = f_col + 3,
        qn1 = q_last,
        qn2 = q_last + 1,
        qn3 = q_last + 2,
        e = eq_col + 5,
        v = eq_col + 6,
    );
    std::fs::write(path, script)
}

/// Row-major plain-text dump of a matrix, one row per line.
pub fn write_matrix(path: &Path, m: &chainquad_core::DMat) -> std::io::Result<()> {
    let mut out = String::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", m[(r, c)]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)
}
