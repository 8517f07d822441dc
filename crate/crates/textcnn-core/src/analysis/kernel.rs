use alloc::string::String;
use core::fmt;
use core::str::FromStr;

/// A `(layer, window)` set of kernels that share one probe set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    /// 1 or 2.
    pub layer: u8,
    pub window: usize,
}

impl GroupKey {
    pub fn new(layer: u8, window: usize) -> Self {
        GroupKey { layer, window }
    }

    /// Probe length: `h` words for layer 1, `2h − 1` for layer 2.
    pub fn ngram_len(self) -> usize {
        match self.layer {
            1 => self.window,
            _ => 2 * self.window - 1,
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.layer, self.window)
    }
}

impl FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || alloc::format!("invalid group {s:?}, expected LAYER-WINDOW such as 1-3");
        let (layer, window) = s.split_once('-').ok_or_else(bad)?;
        let layer: u8 = layer.parse().map_err(|_| bad())?;
        let window: usize = window.parse().map_err(|_| bad())?;
        if !(layer == 1 || layer == 2) || window == 0 {
            return Err(bad());
        }
        Ok(GroupKey { layer, window })
    }
}

/// One convolutional kernel, written `1-3/#48`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelId {
    pub layer: u8,
    pub window: usize,
    pub index: usize,
}

impl KernelId {
    pub fn new(layer: u8, window: usize, index: usize) -> Self {
        KernelId { layer, window, index }
    }

    pub fn group(self) -> GroupKey {
        GroupKey::new(self.layer, self.window)
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}/#{}", self.layer, self.window, self.index)
    }
}

impl FromStr for KernelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (group, index) = s
            .split_once("/#")
            .ok_or_else(|| alloc::format!("invalid kernel {s:?}, expected e.g. 1-3/#48"))?;
        let group: GroupKey = group.parse()?;
        let index = index
            .parse()
            .map_err(|_| alloc::format!("invalid kernel index in {s:?}"))?;
        Ok(KernelId::new(group.layer, group.window, index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn display_and_parse() {
        let k = KernelId::new(1, 3, 48);
        assert_eq!(k.to_string(), "1-3/#48");
        assert_eq!("1-3/#48".parse::<KernelId>().unwrap(), k);
        assert!("3-3/#1".parse::<KernelId>().is_err());
        assert!("1-3#1".parse::<KernelId>().is_err());
        assert_eq!("2-5".parse::<GroupKey>().unwrap().ngram_len(), 9);
        assert_eq!(GroupKey::new(1, 4).ngram_len(), 4);
    }
}
