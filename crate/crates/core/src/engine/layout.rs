use crate::error::{Error, Result};

/// What a plane holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlaneRole {
    Red,
    Green,
    Blue,
    Depth,
    Mean { component: usize, channel: usize },
    Variance { component: usize },
    Weight { component: usize },
    Mask,
    Counter,
    Other(usize),
}

/// A set of equally sized, row-major scalar planes held in one buffer.
///
/// Consecutive planes start one cache line apart modulo a page, so walking
/// the same pixel index across many planes does not pile every access onto
/// the same cache sets.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneSet<T> {
    width: usize,
    height: usize,
    stride: usize,
    roles: Vec<PlaneRole>,
    data: Vec<T>,
}

const PAGE_BYTES: usize = 4096;
const LINE_BYTES: usize = 64;

fn plane_stride<T>(n: usize) -> usize {
    let size = std::mem::size_of::<T>().max(1);
    let page = (PAGE_BYTES / size).max(1);
    let line = (LINE_BYTES / size).max(1);
    n.div_ceil(page) * page + line
}

impl<T: Copy + Default> PlaneSet<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            stride: plane_stride::<T>(width * height),
            roles: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn filled(width: usize, height: usize, roles: &[PlaneRole], value: T) -> Self {
        let mut set = Self::new(width, height);
        let n = set.pixel_count();
        set.data = vec![T::default(); set.stride * roles.len()];
        for chunk in set.data.chunks_mut(set.stride) {
            chunk[..n].fill(value);
        }
        set.roles = roles.to_vec();
        set
    }

    pub fn push(&mut self, role: PlaneRole, data: Vec<T>) -> Result<()> {
        if data.len() != self.pixel_count() {
            return Err(Error::Layout(format!(
                "plane {role:?} has {} elements, expected {}",
                data.len(),
                self.pixel_count()
            )));
        }
        self.data.extend_from_slice(&data);
        self.data.resize(self.data.len() + self.stride - data.len(), T::default());
        self.roles.push(role);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn roles(&self) -> &[PlaneRole] {
        &self.roles
    }

    pub fn planes(&self) -> Vec<&[T]> {
        let n = self.pixel_count();
        self.data.chunks(self.stride).map(|c| &c[..n]).collect()
    }

    /// Disjoint mutable views of every plane.
    pub fn planes_mut(&mut self) -> Vec<&mut [T]> {
        let n = self.pixel_count();
        self.data.chunks_mut(self.stride).map(|c| &mut c[..n]).collect()
    }

    pub fn plane(&self, idx: usize) -> &[T] {
        let start = idx * self.stride;
        &self.data[start..start + self.pixel_count()]
    }

    pub fn plane_mut(&mut self, idx: usize) -> &mut [T] {
        let start = idx * self.stride;
        let n = self.pixel_count();
        &mut self.data[start..start + n]
    }

    pub fn by_role(&self, role: PlaneRole) -> Option<&[T]> {
        self.roles.iter().position(|&r| r == role).map(|i| self.plane(i))
    }
}

/// Splits an interleaved `RGBRGB...` frame into R, G and B planes.
pub fn aos_to_soa<T: Copy + Default>(width: usize, height: usize, interleaved: &[T]) -> Result<PlaneSet<T>> {
    let n = width * height;
    if interleaved.len() != n * 3 {
        return Err(Error::Layout(format!(
            "interleaved frame has {} elements, expected {} for {width}x{height}x3",
            interleaved.len(),
            n * 3
        )));
    }
    let mut set = PlaneSet::filled(width, height, &[PlaneRole::Red, PlaneRole::Green, PlaneRole::Blue], T::default());
    let mut planes = set.planes_mut();
    let [r, g, b] = &mut planes[..] else {
        unreachable!("three planes were just allocated")
    };
    for (i, px) in interleaved.chunks_exact(3).enumerate() {
        r[i] = px[0];
        g[i] = px[1];
        b[i] = px[2];
    }
    Ok(set)
}

/// Interleaves three planes back into `RGBRGB...` order.
pub fn soa_to_aos<T: Copy + Default>(planes: &PlaneSet<T>) -> Result<Vec<T>> {
    if planes.len() != 3 {
        return Err(Error::Layout(format!("expected 3 colour planes, got {}", planes.len())));
    }
    let n = planes.pixel_count();
    let (r, g, b) = (planes.plane(0), planes.plane(1), planes.plane(2));
    let mut out = vec![T::default(); n * 3];
    for (i, px) in out.chunks_exact_mut(3).enumerate() {
        px[0] = r[i];
        px[1] = g[i];
        px[2] = b[i];
    }
    Ok(out)
}
