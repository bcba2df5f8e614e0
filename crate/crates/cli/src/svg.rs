//! A small SVG writer: dots and polylines in the complex plane, y up.

use heun_spectra::C64;

pub struct Plot {
    lo: C64,
    hi: C64,
    size: f64,
    body: String,
}

impl Plot {
    /// Square frame around all of `extent`, with a margin.
    pub fn new(extent: impl IntoIterator<Item = C64>, size: f64) -> Self {
        let (mut lo, mut hi) = (C64::new(f64::INFINITY, f64::INFINITY), C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for z in extent {
            lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        if !lo.re.is_finite() {
            lo = C64::new(-1.0, -1.0);
            hi = C64::new(1.0, 1.0);
        }
        let c = (lo + hi) / 2.0;
        let half = 0.55 * (hi.re - lo.re).max(hi.im - lo.im).max(1e-9);
        Plot { lo: c - C64::new(half, half), hi: c + C64::new(half, half), size, body: String::new() }
    }

    fn map(&self, z: C64) -> (f64, f64) {
        let s = self.size / (self.hi.re - self.lo.re);
        ((z.re - self.lo.re) * s, (self.hi.im - z.im) * s)
    }

    pub fn dot(&mut self, z: C64, r: f64, color: &str) {
        let (x, y) = self.map(z);
        self.body.push_str(&format!("<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r}\" fill=\"{color}\"/>\n"));
    }

    pub fn polyline(&mut self, pts: &[C64], width: f64, color: &str) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&z| {
                let (x, y) = self.map(z);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        self.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>\n",
            coords.join(" ")
        ));
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            s = self.size
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y_axis_points_up() {
        let p = Plot::new([C64::new(0.0, 0.0), C64::new(1.0, 1.0)], 100.0);
        let (_, y0) = p.map(C64::new(0.5, 0.0));
        let (_, y1) = p.map(C64::new(0.5, 1.0));
        assert!(y1 < y0);
        let (x, y) = p.map(C64::new(0.5, 0.5));
        assert!((x - 50.0).abs() < 1e-9 && (y - 50.0).abs() < 1e-9);
    }
}
