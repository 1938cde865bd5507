use crate::frame::GrayImage;

/// Summed-area tables of pixel values and squared pixel values.
///
/// Both grids are `(width + 1) x (height + 1)` with a zero first row and
/// column, so `sums[y][x]` is the sum over `[0, x) x [0, y)`.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: u32,
    height: u32,
    sums: Vec<u64>,
    squared_sums: Vec<u64>,
}

impl IntegralImage {
    pub fn new(image: &GrayImage) -> IntegralImage {
        let (w, h) = (image.width as usize, image.height as usize);
        let stride = w + 1;
        let mut sums = vec![0u64; stride * (h + 1)];
        let mut squared_sums = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            let mut row_sq = 0u64;
            for x in 0..w {
                let v = u64::from(image.data[y * w + x]);
                row += v;
                row_sq += v * v;
                let i = (y + 1) * stride + x + 1;
                sums[i] = sums[i - stride] + row;
                squared_sums[i] = squared_sums[i - stride] + row_sq;
            }
        }
        IntegralImage { width: image.width, height: image.height, sums, squared_sums }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Raw accumulation at grid corner `(x, y)`, `0 <= x <= width`.
    pub fn sum_at(&self, x: u32, y: u32) -> u64 {
        self.sums[y as usize * (self.width as usize + 1) + x as usize]
    }

    #[inline]
    fn corners(table: &[u64], stride: usize, x: u32, y: u32, w: u32, h: u32) -> u64 {
        let (x0, y0) = (x as usize, y as usize);
        let (x1, y1) = (x0 + w as usize, y0 + h as usize);
        table[y1 * stride + x1] + table[y0 * stride + x0] - table[y0 * stride + x1] - table[y1 * stride + x0]
    }

    /// Sum of pixels in `[x, x + w) x [y, y + h)`; the rectangle must lie
    /// inside the image.
    #[inline]
    pub fn rect_sum(&self, x: u32, y: u32, w: u32, h: u32) -> u64 {
        debug_assert!(x + w <= self.width && y + h <= self.height);
        Self::corners(&self.sums, self.width as usize + 1, x, y, w, h)
    }

    #[inline]
    pub fn rect_squared_sum(&self, x: u32, y: u32, w: u32, h: u32) -> u64 {
        debug_assert!(x + w <= self.width && y + h <= self.height);
        Self::corners(&self.squared_sums, self.width as usize + 1, x, y, w, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_rect() {
        let img = GrayImage::new(4, 4, vec![1; 16]).unwrap();
        let ii = IntegralImage::new(&img);
        assert_eq!(ii.rect_sum(1, 1, 2, 2), 4);
        assert_eq!(ii.rect_sum(0, 0, 4, 4), 16);
    }

    #[test]
    fn single_pixel_grid() {
        let img = GrayImage::new(1, 1, vec![7]).unwrap();
        let ii = IntegralImage::new(&img);
        assert_eq!(ii.sums, vec![0, 0, 0, 7]);
        assert_eq!(ii.squared_sums, vec![0, 0, 0, 49]);
    }
}
