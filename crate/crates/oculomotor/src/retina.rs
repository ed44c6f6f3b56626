//! Foveated retinotopic tiling of camera frames into SC receptive fields,
//! threshold activation, and the eccentricity-dependent SC output weight.
//!
//! The frame is tiled with non-overlapping square RFs whose side grows with
//! distance from the fovea center: nested, grid-aligned bands (small squares
//! inside, large outside). Eccentricity is the Chebyshev pixel distance
//! max(|dx|, |dy|) of the RF center from the fovea center, which makes RF
//! side length exactly nondecreasing in eccentricity across band boundaries.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct FrameSpec {
    pub width: u32,
    pub height: u32,
    pub fovea_half_width: u32,
}

impl FrameSpec {
    pub fn fovea_center(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fovea_half_width == 0 || 2 * self.fovea_half_width >= self.width.min(self.height) {
            return Err(Error::config(
                "retina",
                "fovea_half_width must be in (0, min(width,height)/2)",
            ));
        }
        Ok(())
    }
}

/// One tiling band: a centered box of `half_extent` pixels tiled with
/// squares of `side` pixels. Bands are listed innermost first; everything
/// outside the last band is tiled with `outer_side` squares.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub half_extent: u32,
    pub side: u32,
}

#[derive(Debug, Clone)]
pub struct RingSpec {
    pub bands: Vec<Band>,
    pub outer_side: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct ReceptiveField {
    pub id: u32,
    pub x0: u32,
    pub y0: u32,
    pub side: u32,
    /// Chebyshev distance of the RF center from the fovea center, px.
    pub ecc: f64,
    /// Signed center offsets from the fovea center, px.
    pub dx: f64,
    pub dy: f64,
    pub left: bool,
    pub upper: bool,
    pub peripheral: bool,
}

impl ReceptiveField {
    pub fn center(&self) -> (f64, f64) {
        (
            self.x0 as f64 + self.side as f64 / 2.0,
            self.y0 as f64 + self.side as f64 / 2.0,
        )
    }

    pub fn area(&self) -> u32 {
        self.side * self.side
    }
}

/// Rendered image of the laser dot in one eye's frame: a disc in continuous
/// pixel coordinates. `visible = false` means the dot center left the frame
/// (no SC activity, zero reward contribution).
#[derive(Debug, Clone, Copy)]
pub struct TargetDot {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub visible: bool,
}

#[derive(Debug, Clone)]
pub struct RfGrid {
    pub spec: FrameSpec,
    pub rfs: Vec<ReceptiveField>,
    /// pixel (x, y) -> RF id
    lookup: Vec<u32>,
}

/// Saturating-linear SC weight profile: w(d) = w_min + (w_max - w_min) *
/// min(d / d_sat, 1). The same profile applies to horizontal and vertical
/// distances.
#[derive(Debug, Clone, Copy)]
pub struct WeightProfile {
    pub w_min: f64,
    pub w_max: f64,
    pub d_sat_px: f64,
}

impl WeightProfile {
    pub fn validate(&self) -> Result<()> {
        if self.w_min > self.w_max {
            return Err(Error::config("retina", "weight_min must not exceed weight_max"));
        }
        if !(self.d_sat_px > 0.0) {
            return Err(Error::config("retina", "weight_saturation_px must be > 0"));
        }
        Ok(())
    }
}

pub fn sc_weight(eccentricity_px: f64, profile: &WeightProfile) -> f64 {
    debug_assert!(eccentricity_px >= 0.0);
    let t = (eccentricity_px / profile.d_sat_px).min(1.0);
    profile.w_min + (profile.w_max - profile.w_min) * t
}

pub fn build_rf_grid(
    spec: &FrameSpec,
    ring: &RingSpec,
    peripheral_threshold_px: f64,
) -> Result<RfGrid> {
    spec.validate()?;
    let (cx, cy) = (spec.width / 2, spec.height / 2);
    if ring.outer_side == 0 || spec.width % ring.outer_side != 0 || spec.height % ring.outer_side != 0
    {
        return Err(Error::config(
            "retina",
            format!("outer band: side {} does not tile {}x{}", ring.outer_side, spec.width, spec.height),
        ));
    }
    // validate bands innermost-first: strictly increasing sides, each box
    // aligned to the enclosing band's grid and tiled exactly by its own side
    for (i, band) in ring.bands.iter().enumerate() {
        let enclosing_side = ring
            .bands
            .get(i + 1)
            .map(|b| b.side)
            .unwrap_or(ring.outer_side);
        let err = |msg: String| Error::config("retina", format!("band {}: {}", i + 1, msg));
        if band.side == 0 || band.half_extent == 0 {
            return Err(err("side and half_extent must be positive".into()));
        }
        if band.side >= enclosing_side {
            return Err(err(format!(
                "side {} must be smaller than enclosing side {}",
                band.side, enclosing_side
            )));
        }
        if (2 * band.half_extent) % band.side != 0 {
            return Err(err(format!(
                "box of {} px is not tiled exactly by side {}",
                2 * band.half_extent,
                band.side
            )));
        }
        if band.half_extent % enclosing_side != 0 || cx % enclosing_side != 0 || cy % enclosing_side != 0 {
            return Err(err(format!(
                "box edge at center +/- {} px is not aligned to the enclosing {} px grid",
                band.half_extent, enclosing_side
            )));
        }
        if band.half_extent > cx || band.half_extent > cy {
            return Err(err("box exceeds the frame".into()));
        }
        if let Some(inner) = i.checked_sub(1).and_then(|j| ring.bands.get(j)) {
            if inner.half_extent >= band.half_extent {
                return Err(err("bands must be listed innermost first, strictly nested".into()));
            }
        }
    }

    // generate cells coarsest-first, subdividing cells fully inside a finer band's box
    let mut cells: Vec<(u32, u32, u32)> = Vec::new();
    for y in (0..spec.height).step_by(ring.outer_side as usize) {
        for x in (0..spec.width).step_by(ring.outer_side as usize) {
            cells.push((x, y, ring.outer_side));
        }
    }
    for band in ring.bands.iter().rev() {
        let (bx0, by0) = (cx - band.half_extent, cy - band.half_extent);
        let (bx1, by1) = (cx + band.half_extent, cy + band.half_extent);
        let mut next = Vec::with_capacity(cells.len());
        for &(x, y, side) in &cells {
            let inside = x >= bx0 && x + side <= bx1 && y >= by0 && y + side <= by1;
            if inside && side > band.side {
                for sy in (y..y + side).step_by(band.side as usize) {
                    for sx in (x..x + side).step_by(band.side as usize) {
                        next.push((sx, sy, band.side));
                    }
                }
            } else {
                next.push((x, y, side));
            }
        }
        cells = next;
    }
    // deterministic id order: row-major by (y0, x0)
    cells.sort_by_key(|&(x, y, _)| (y, x));

    let (fcx, fcy) = spec.fovea_center();
    let mut rfs = Vec::with_capacity(cells.len());
    for (id, &(x0, y0, side)) in cells.iter().enumerate() {
        let ctr_x = x0 as f64 + side as f64 / 2.0;
        let ctr_y = y0 as f64 + side as f64 / 2.0;
        let dx = ctr_x - fcx;
        let dy = ctr_y - fcy;
        let ecc = dx.abs().max(dy.abs());
        rfs.push(ReceptiveField {
            id: id as u32,
            x0,
            y0,
            side,
            ecc,
            dx,
            dy,
            left: dx < 0.0,
            upper: dy < 0.0,
            peripheral: ecc > peripheral_threshold_px,
        });
    }

    let mut lookup = vec![u32::MAX; (spec.width * spec.height) as usize];
    for rf in &rfs {
        for y in rf.y0..rf.y0 + rf.side {
            for x in rf.x0..rf.x0 + rf.side {
                let idx = (y * spec.width + x) as usize;
                if lookup[idx] != u32::MAX {
                    return Err(Error::config(
                        "retina",
                        format!("pixel ({x},{y}) covered by two receptive fields"),
                    ));
                }
                lookup[idx] = rf.id;
            }
        }
    }
    if lookup.iter().any(|&v| v == u32::MAX) {
        return Err(Error::config("retina", "ring spec leaves pixels untiled"));
    }
    Ok(RfGrid {
        spec: *spec,
        rfs,
        lookup,
    })
}

impl RfGrid {
    pub fn rf_at(&self, x: u32, y: u32) -> &ReceptiveField {
        &self.rfs[self.lookup[(y * self.spec.width + x) as usize] as usize]
    }

    /// Id of the RF occupying the mirror (about the vertical midline)
    /// position of `id`.
    pub fn mirror_id(&self, id: u32) -> u32 {
        let rf = &self.rfs[id as usize];
        let mx = self.spec.width - rf.x0 - rf.side;
        self.lookup[(rf.y0 * self.spec.width + mx) as usize]
    }

    /// Is the RF inside the foveal band that drives only fixation/reward
    /// (not the gaze sub-networks)?
    pub fn is_foveal(&self, id: u32) -> bool {
        self.rfs[id as usize].ecc <= self.spec.fovea_half_width as f64
    }

    /// Per-RF coverage of the dot disc, visiting only RFs the disc can touch.
    /// Returns (rf id, fraction) sorted by id.
    pub fn coverages(&self, dot: &TargetDot) -> Vec<(u32, f64)> {
        if !dot.visible {
            return Vec::new();
        }
        let x_lo = (dot.x - dot.radius).floor().max(0.0) as u32;
        let x_hi = ((dot.x + dot.radius).ceil() as u32).min(self.spec.width);
        let y_lo = (dot.y - dot.radius).floor().max(0.0) as u32;
        let y_hi = ((dot.y + dot.radius).ceil() as u32).min(self.spec.height);
        let r2 = dot.radius * dot.radius;
        let mut counts: Vec<(u32, u32)> = Vec::new();
        for y in y_lo..y_hi {
            for x in x_lo..x_hi {
                let px = x as f64 + 0.5;
                let py = y as f64 + 0.5;
                let ddx = px - dot.x;
                let ddy = py - dot.y;
                if ddx * ddx + ddy * ddy <= r2 {
                    let id = self.lookup[(y * self.spec.width + x) as usize];
                    match counts.binary_search_by_key(&id, |&(i, _)| i) {
                        Ok(k) => counts[k].1 += 1,
                        Err(k) => counts.insert(k, (id, 1)),
                    }
                }
            }
        }
        counts
            .into_iter()
            .map(|(id, c)| (id, c as f64 / self.rfs[id as usize].area() as f64))
            .collect()
    }
}

/// Fraction of the RF's pixels whose centers lie inside the dot disc.
pub fn coverage(rf: &ReceptiveField, dot: &TargetDot) -> f64 {
    if !dot.visible {
        return 0.0;
    }
    let r2 = dot.radius * dot.radius;
    let mut count = 0u32;
    for y in rf.y0..rf.y0 + rf.side {
        for x in rf.x0..rf.x0 + rf.side {
            let ddx = x as f64 + 0.5 - dot.x;
            let ddy = y as f64 + 0.5 - dot.y;
            if ddx * ddx + ddy * ddy <= r2 {
                count += 1;
            }
        }
    }
    count as f64 / rf.area() as f64
}

/// Ids whose coverage meets the activation fraction (>= convention).
pub fn sc_activation(coverages: &[(u32, f64)], activation_fraction: f64) -> Vec<u32> {
    coverages
        .iter()
        .filter(|&&(_, c)| c >= activation_fraction)
        .map(|&(id, _)| id)
        .collect()
}

pub fn default_ring_spec(cfg_band1: (u32, u32), cfg_band2: (u32, u32), outer: u32) -> RingSpec {
    RingSpec {
        bands: vec![
            Band { half_extent: cfg_band1.0, side: cfg_band1.1 },
            Band { half_extent: cfg_band2.0, side: cfg_band2.1 },
        ],
        outer_side: outer,
    }
}
