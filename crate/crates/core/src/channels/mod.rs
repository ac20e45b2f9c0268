//! Channel stacks and the spatial and frequency channel families.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{arg, Result};

pub mod convolve;
pub mod frequency;
pub mod spatial;

/// Planar stack of equally sized real channels with unique names.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    width: usize,
    height: usize,
    names: Vec<String>,
    data: Vec<f64>,
}

impl ChannelStack {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, names: Vec::new(), data: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn channel_by_name(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.channel(i))
    }

    pub fn push(&mut self, name: impl Into<String>, plane: Vec<f64>) -> Result<()> {
        let name = name.into();
        if plane.len() != self.width * self.height {
            return Err(arg(format!(
                "channel `{name}` has {} samples, stack is {}x{}",
                plane.len(),
                self.width,
                self.height
            )));
        }
        if self.names.contains(&name) {
            return Err(arg(format!("duplicate channel name `{name}`")));
        }
        if plane.iter().any(|v| !v.is_finite()) {
            return Err(arg(format!("channel `{name}` contains non-finite values")));
        }
        self.names.push(name);
        self.data.extend(plane);
        Ok(())
    }

    /// Append every channel of `other`.
    pub fn extend(&mut self, other: ChannelStack) -> Result<()> {
        if other.width != self.width || other.height != self.height {
            return Err(arg("cannot merge stacks of different sizes"));
        }
        let n = self.width * self.height;
        for (i, name) in other.names.into_iter().enumerate() {
            self.push(name, other.data[i * n..(i + 1) * n].to_vec())?;
        }
        Ok(())
    }

    /// Apply `f` to each channel (by index and name), keeping names.
    pub fn map_channels(&self, mut f: impl FnMut(usize, &str, &[f64]) -> Vec<f64>) -> Result<ChannelStack> {
        let mut out = ChannelStack::new(self.width, self.height);
        for (i, name) in self.names.iter().enumerate() {
            out.push(name.clone(), f(i, name, self.channel(i)))?;
        }
        Ok(out)
    }

    pub(crate) fn from_parts(width: usize, height: usize, names: Vec<String>, data: Vec<f64>) -> Self {
        debug_assert_eq!(names.len() * width * height, data.len());
        Self { width, height, names, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn push_validates_names_and_sizes() {
        let mut s = ChannelStack::new(2, 2);
        s.push("a", vec![0.0; 4]).unwrap();
        assert!(s.push("a", vec![0.0; 4]).is_err());
        assert!(s.push("b", vec![0.0; 3]).is_err());
        assert!(s.push("c", vec![f64::INFINITY; 4]).is_err());
        s.push("b", vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.channel_by_name("b").unwrap()[3], 4.0);
        assert_eq!(s.len(), 2);
    }
}
