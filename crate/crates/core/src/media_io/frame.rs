use adasr_tensor::Tensor;

use super::resample::{resize_planar, ResizeKernel};
use crate::{Error, Result};

/// Frame sides must be multiples of this (total stride of the networks).
pub const SIZE_MULTIPLE: usize = 16;

/// An RGB image with values in `[0, 1]`, stored planar (`3 x H x W`).
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

pub(crate) fn check_frame_size(height: usize, width: usize) -> Result<()> {
    if height < SIZE_MULTIPLE || width < SIZE_MULTIPLE {
        return Err(Error::Shape(format!(
            "frame {width}x{height} is smaller than {SIZE_MULTIPLE}x{SIZE_MULTIPLE}"
        )));
    }
    if height % SIZE_MULTIPLE != 0 || width % SIZE_MULTIPLE != 0 {
        return Err(Error::Shape(format!(
            "frame {width}x{height} must have sides divisible by {SIZE_MULTIPLE}"
        )));
    }
    Ok(())
}

impl Frame {
    /// Builds a frame from planar data, validating size and value range.
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        check_frame_size(height, width)?;
        if data.len() != 3 * height * width {
            return Err(Error::Shape(format!(
                "expected {} values for a {width}x{height} frame, got {}",
                3 * height * width,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Validation(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self { height, width, data })
    }

    /// Builds a frame from interleaved `H x W x 3` data.
    pub fn from_hwc(height: usize, width: usize, hwc: &[f32]) -> Result<Self> {
        if hwc.len() != 3 * height * width {
            return Err(Error::Shape(format!(
                "expected {} interleaved values, got {}",
                3 * height * width,
                hwc.len()
            )));
        }
        let plane = height * width;
        let mut data = vec![0.0; 3 * plane];
        for (i, px) in hwc.chunks_exact(3).enumerate() {
            for c in 0..3 {
                data[c * plane + i] = px[c];
            }
        }
        Self::new(height, width, data)
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * height * width);
        for c in 0..3 {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(height, width, data)
    }

    pub fn filled(height: usize, width: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::from_fn(height, width, |c, _, _| rgb[c])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Planar `3 x H x W` values.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn to_hwc(&self) -> Vec<f32> {
        let plane = self.height * self.width;
        let mut out = Vec::with_capacity(3 * plane);
        for i in 0..plane {
            for c in 0..3 {
                out.push(self.data[c * plane + i]);
            }
        }
        out
    }

    pub fn same_size(&self, other: &Frame) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// `[1, 3, H, W]` tensor view.
    pub fn to_tensor(&self) -> Tensor<f32> {
        Tensor::from_vec(self.data.clone(), &[1, 3, self.height, self.width])
    }

    /// Stacks equally sized frames into `[B, 3, H, W]`.
    pub fn batch(frames: &[&Frame]) -> Result<Tensor<f32>> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Shape("cannot batch zero frames".into()))?;
        let mut data = Vec::with_capacity(frames.len() * first.data.len());
        for f in frames {
            if !f.same_size(first) {
                return Err(Error::Shape(format!(
                    "batch mixes {}x{} and {}x{} frames",
                    first.width, first.height, f.width, f.height
                )));
            }
            data.extend_from_slice(&f.data);
        }
        Ok(Tensor::from_vec(data, &[frames.len(), 3, first.height, first.width]))
    }

    /// Extracts sample `index` of a `[B, 3, H, W]` tensor. Finite values are
    /// clamped into `[0, 1]`; non-finite values are an error.
    pub fn from_tensor(t: &Tensor<f32>, index: usize) -> Result<Self> {
        let s = t.shape();
        if s.len() != 4 || s[1] != 3 || index >= s[0] {
            return Err(Error::Shape(format!("cannot take frame {index} from tensor {s:?}")));
        }
        let n = 3 * s[2] * s[3];
        let slice = &t.data()[index * n..(index + 1) * n];
        if slice.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite pixel in generated frame".into()));
        }
        Self::new(s[2], s[3], slice.iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    /// Rec. 601 luma in `[0, 1]`, row-major.
    pub fn luma(&self) -> Vec<f64> {
        let plane = self.height * self.width;
        (0..plane)
            .map(|i| {
                0.299 * self.data[i] as f64
                    + 0.587 * self.data[plane + i] as f64
                    + 0.114 * self.data[2 * plane + i] as f64
            })
            .collect()
    }

    pub fn mean_abs_diff(&self, other: &Frame) -> Result<f64> {
        if !self.same_size(other) {
            return Err(Error::Shape("frames differ in size".into()));
        }
        let total: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs() as f64)
            .sum();
        Ok(total / self.data.len() as f64)
    }

    /// Resamples to `height x width`; area filtering when shrinking, bicubic
    /// when enlarging.
    pub fn resized(&self, height: usize, width: usize) -> Result<Frame> {
        if height == self.height && width == self.width {
            return Ok(self.clone());
        }
        let kernel = if height < self.height || width < self.width {
            ResizeKernel::Area
        } else {
            ResizeKernel::Bicubic
        };
        let data = resize_planar(&self.data, 3, self.height, self.width, height, width, kernel);
        Frame::new(height, width, data)
    }

    /// Horizontal mirror image.
    pub fn flipped_horizontally(&self) -> Frame {
        let (h, w) = (self.height, self.width);
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(w) {
            row.reverse();
        }
        debug_assert_eq!(data.len(), 3 * h * w);
        Frame { height: h, width: w, data }
    }
}

/// An ordered, nonempty clip of equally sized frames.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    fps: f64,
}

pub const DEFAULT_FPS: f64 = 25.0;

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, fps: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Validation("a frame sequence needs at least one frame".into()))?;
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Validation(format!("fps must be positive, got {fps}")));
        }
        if let Some(bad) = frames.iter().position(|f| !f.same_size(first)) {
            return Err(Error::Shape(format!(
                "frame {bad} is {}x{}, clip is {}x{}",
                frames[bad].width, frames[bad].height, first.width, first.height
            )));
        }
        Ok(Self { frames, fps })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes_and_values() {
        assert!(matches!(Frame::filled(20, 32, [0.5; 3]), Err(Error::Shape(_))));
        assert!(matches!(Frame::filled(8, 8, [0.5; 3]), Err(Error::Shape(_))));
        assert!(matches!(Frame::filled(16, 16, [1.5, 0.0, 0.0]), Err(Error::Validation(_))));
        assert!(matches!(Frame::filled(16, 16, [f32::NAN; 3]), Err(Error::Validation(_))));
        assert!(Frame::filled(16, 32, [0.0, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn hwc_round_trip_and_tensor_view() {
        let f = Frame::from_fn(16, 32, |c, y, x| ((c * 7 + y * 3 + x) % 11) as f32 / 10.0).unwrap();
        let back = Frame::from_hwc(16, 32, &f.to_hwc()).unwrap();
        assert_eq!(f, back);
        let t = Frame::batch(&[&f, &back]).unwrap();
        assert_eq!(t.shape(), &[2, 3, 16, 32]);
        assert_eq!(Frame::from_tensor(&t, 1).unwrap(), f);
        assert_eq!(f.get(2, 5, 9), f.data()[2 * 16 * 32 + 5 * 32 + 9]);
    }

    #[test]
    fn sequence_requires_uniform_sizes() {
        let a = Frame::filled(16, 16, [0.1; 3]).unwrap();
        let b = Frame::filled(32, 16, [0.1; 3]).unwrap();
        assert!(FrameSequence::new(vec![], 25.0).is_err());
        assert!(FrameSequence::new(vec![a.clone(), b], 25.0).is_err());
        assert!(FrameSequence::new(vec![a.clone()], 0.0).is_err());
        assert_eq!(FrameSequence::new(vec![a.clone(), a], 30.0).unwrap().len(), 2);
    }

    #[test]
    fn flip_is_an_involution() {
        let f = Frame::from_fn(16, 16, |c, y, x| ((c + y * 5 + x * 3) % 13) as f32 / 12.0).unwrap();
        assert_eq!(f.flipped_horizontally().flipped_horizontally(), f);
        assert_eq!(f.flipped_horizontally().get(1, 3, 0), f.get(1, 3, 15));
    }
}
