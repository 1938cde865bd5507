//! Overlays for the pilot's view: the user box and the active command.

use crate::command::{CommandKind, PilotCommand};
use crate::frame::Frame;
use crate::geometry::PixelCoord;
use crate::pipeline::FrameReport;

pub const BOX_COLOR: [u8; 3] = [0, 220, 0];
pub const COMMAND_COLOR: [u8; 3] = [255, 0, 0];
/// Half size of the "come closer" cross and radius of the "go further"
/// circle, pixels.
pub const GLYPH_SIZE: i32 = 10;
const ARROW_HEAD: f64 = 12.0;

fn plot(frame: &mut Frame, x: i32, y: i32, rgb: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < frame.width() && (y as u32) < frame.height() {
        frame.put_pixel(x as u32, y as u32, rgb);
    }
}

/// Bresenham line; pixels outside the frame are skipped.
pub fn draw_line(frame: &mut Frame, from: PixelCoord, to: PixelCoord, rgb: [u8; 3]) {
    let (mut x, mut y) = (from.x, from.y);
    let dx = (to.x - x).abs();
    let dy = -(to.y - y).abs();
    let sx = if x < to.x { 1 } else { -1 };
    let sy = if y < to.y { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(frame, x, y, rgb);
        if x == to.x && y == to.y {
            return;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

pub fn draw_rect(frame: &mut Frame, x: i32, y: i32, w: i32, h: i32, rgb: [u8; 3]) {
    if w <= 0 || h <= 0 {
        return;
    }
    let (r, b) = (x + w - 1, y + h - 1);
    draw_line(frame, PixelCoord::new(x, y), PixelCoord::new(r, y), rgb);
    draw_line(frame, PixelCoord::new(x, b), PixelCoord::new(r, b), rgb);
    draw_line(frame, PixelCoord::new(x, y), PixelCoord::new(x, b), rgb);
    draw_line(frame, PixelCoord::new(r, y), PixelCoord::new(r, b), rgb);
}

/// Midpoint circle outline.
pub fn draw_circle(frame: &mut Frame, c: PixelCoord, radius: i32, rgb: [u8; 3]) {
    let (mut x, mut y) = (radius, 0);
    let mut err = 1 - radius;
    while x >= y {
        for (px, py) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
            plot(frame, c.x + px, c.y + py, rgb);
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
}

pub fn draw_cross(frame: &mut Frame, c: PixelCoord, half: i32, rgb: [u8; 3]) {
    draw_line(frame, PixelCoord::new(c.x - half, c.y - half), PixelCoord::new(c.x + half, c.y + half), rgb);
    draw_line(frame, PixelCoord::new(c.x - half, c.y + half), PixelCoord::new(c.x + half, c.y - half), rgb);
}

/// Line from `from` to `to` with two barbs at `to`.
pub fn draw_arrow(frame: &mut Frame, from: PixelCoord, to: PixelCoord, rgb: [u8; 3]) {
    draw_line(frame, from, to, rgb);
    let (dx, dy) = (f64::from(from.x - to.x), f64::from(from.y - to.y));
    let len = dx.hypot(dy);
    if len == 0.0 {
        return;
    }
    let size = ARROW_HEAD.min(len / 2.0);
    let (ux, uy) = (dx / len, dy / len);
    let (c, s) = (0.5f64.cos(), 0.5f64.sin());
    for sign in [1.0, -1.0] {
        let bx = ux * c - sign * uy * s;
        let by = sign * ux * s + uy * c;
        let tip = PixelCoord::new(to.x + (size * bx).round() as i32, to.y + (size * by).round() as i32);
        draw_line(frame, to, tip, rgb);
    }
}

/// Where a planar command's arrow ends.
pub fn arrow_end(p_uc: PixelCoord, cmd: &PilotCommand) -> PixelCoord {
    p_uc + PixelCoord::new(cmd.vector[0].round() as i32, cmd.vector[1].round() as i32)
}

/// Draw the user box and the glyph of the command currently in force: an
/// arrow from `p_uc` for planar commands, a cross for "come closer" and a
/// small circle for "go further".
pub fn annotate(frame: &Frame, report: &FrameReport) -> Frame {
    let mut out = frame.clone();
    if let Some(b) = report.user_box {
        draw_rect(&mut out, b.x, b.y, b.width, b.height, BOX_COLOR);
    }
    if let (Some(p_uc), Some(cmd)) = (report.p_uc, report.active_command) {
        match cmd.kind {
            CommandKind::Planar => draw_arrow(&mut out, p_uc, arrow_end(p_uc, &cmd), COMMAND_COLOR),
            CommandKind::Depth if cmd.vector[2] < 0.0 => draw_cross(&mut out, p_uc, GLYPH_SIZE, COMMAND_COLOR),
            CommandKind::Depth => draw_circle(&mut out, p_uc, GLYPH_SIZE, COMMAND_COLOR),
            CommandKind::None => {}
        }
    }
    out
}
