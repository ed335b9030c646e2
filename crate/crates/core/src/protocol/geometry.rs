//! Device geometry and screen-to-camera transforms.
//!
//! Placements are stored as normalized `(u, v)` in the *displayed* frame of the
//! orientation the trial ran in (`u` to the right, `v` down, as the participant
//! sees the screen). The portrait physical frame is the native pixel grid with
//! the origin at the top-left of the screen in portrait.

use serde::{Deserialize, Serialize};

use super::{OrientationMode, ProtocolError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    /// Portrait-native width in pixels.
    pub w_px: u32,
    /// Portrait-native height in pixels.
    pub h_px: u32,
    /// Pixels per inch.
    pub dpi: f64,
    /// Front camera position in inches, relative to the portrait top-left corner.
    pub cam_x_in: f64,
    pub cam_y_in: f64,
}

impl Default for DeviceGeometry {
    /// A 1080x1920 phone at 432 dpi with the camera centred 0.2 in above the screen.
    fn default() -> Self {
        DeviceGeometry { w_px: 1080, h_px: 1920, dpi: 432.0, cam_x_in: 1.25, cam_y_in: -0.2 }
    }
}

impl DeviceGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.w_px == 0 || self.h_px == 0 {
            return Err(ProtocolError::InvalidArgument("screen dimensions must be positive".into()));
        }
        if !(self.dpi.is_finite() && self.dpi > 0.0) {
            return Err(ProtocolError::InvalidArgument(format!("dpi must be positive, got {}", self.dpi)));
        }
        if !(self.cam_x_in.is_finite() && self.cam_y_in.is_finite()) {
            return Err(ProtocolError::InvalidArgument("camera offset must be finite".into()));
        }
        Ok(())
    }

    /// Width and height in pixels of the displayed frame for `orientation`.
    pub fn displayed_size(&self, orientation: OrientationMode) -> (f64, f64) {
        if orientation.is_landscape() {
            (self.h_px as f64, self.w_px as f64)
        } else {
            (self.w_px as f64, self.h_px as f64)
        }
    }

    /// Map a normalized displayed point to portrait physical pixels.
    pub fn displayed_to_physical_px(&self, u: f64, v: f64, orientation: OrientationMode) -> (f64, f64) {
        let (dw, dh) = self.displayed_size(orientation);
        let (xd, yd) = (u * dw, v * dh);
        let (w, h) = (self.w_px as f64, self.h_px as f64);
        match orientation {
            OrientationMode::Portrait => (xd, yd),
            OrientationMode::ReversePortrait => (w - xd, h - yd),
            // Left portrait edge is up: displayed top is x=0, displayed right is the portrait top.
            OrientationMode::Landscape => (yd, h - xd),
            // Right portrait edge is up.
            OrientationMode::ReverseLandscape => (w - yd, xd),
        }
    }
}

/// Offset in inches from the front camera to a displayed point, in the portrait physical frame.
pub fn target_offset_from_camera(
    u: f64,
    v: f64,
    orientation: OrientationMode,
    geometry: &DeviceGeometry,
) -> (f64, f64) {
    let (xp, yp) = geometry.displayed_to_physical_px(u, v, orientation);
    (xp / geometry.dpi - geometry.cam_x_in, yp / geometry.dpi - geometry.cam_y_in)
}

/// Same offset expressed in the displayed frame (right / down as the participant sees it).
///
/// This is the direction of the target from the camera relative to the
/// participant's upright head, which is what orientation gating diversifies.
pub fn view_offset_from_camera(
    u: f64,
    v: f64,
    orientation: OrientationMode,
    geometry: &DeviceGeometry,
) -> (f64, f64) {
    let (dx, dy) = target_offset_from_camera(u, v, orientation, geometry);
    match orientation {
        OrientationMode::Portrait => (dx, dy),
        OrientationMode::ReversePortrait => (-dx, -dy),
        OrientationMode::Landscape => (-dy, dx),
        OrientationMode::ReverseLandscape => (dy, -dx),
    }
}

/// Visual angle in degrees subtended by an on-screen distance at a viewing distance.
pub fn eccentricity_deg(radius_in: f64, viewing_distance_in: f64) -> Result<f64> {
    if !(viewing_distance_in.is_finite() && viewing_distance_in > 0.0) {
        return Err(ProtocolError::InvalidArgument("viewing distance must be positive".into()));
    }
    if !(radius_in.is_finite() && radius_in >= 0.0) {
        return Err(ProtocolError::InvalidArgument("radius must be non-negative".into()));
    }
    Ok((radius_in / viewing_distance_in).atan().to_degrees())
}
