//! Images, patches and exact dense scanning in two dimensions.
//!
//! Kernels act natively on rectangular blocks; only fragmentation is done
//! axis by axis with the one-dimensional index maps. A fragmented image with
//! `s_r` row fragments and `s_c` column fragments holds `s_r * s_c` fragment
//! images, numbered row-major: fragment `(a, b)` has linear index
//! `(a - 1) s_c + b`.

use std::fmt;
use std::sync::Arc;

use crate::chain::receptive_field;
use crate::error::{Error, Result};
use crate::signal::rem;
use crate::windowed::{defragment_source, fragment_source};

/// A non-empty rectangular matrix of samples, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Image<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.cols).collect();
        f.debug_struct("Image").field("rows", &rows).finish()
    }
}

impl<T> Image<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape {
                op: "Image::new",
                detail: format!("{} samples cannot form a non-empty {rows}x{cols} image", data.len()),
            });
        }
        Ok(Image { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(rows > 0 && cols > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 1..=rows {
            for j in 1..=cols {
                data.push(f(i, j));
            }
        }
        Image { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Pixel at 1-based position `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> &T {
        assert!((1..=self.rows).contains(&i) && (1..=self.cols).contains(&j));
        &self.data[(i - 1) * self.cols + j - 1]
    }

    pub fn as_row_major(&self) -> &[T] {
        &self.data
    }

    pub fn into_row_major(self) -> Vec<T> {
        self.data
    }
}

impl<T: Clone> Image<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape {
                op: "Image::from_rows",
                detail: "rows differ in length".into(),
            });
        }
        Image::new(r, c, rows.concat())
    }
}

/// The `d_r x d_c` block whose top-left pixel is `(i, j)`.
pub fn patch<T: Clone>(xi: &Image<T>, d_r: usize, d_c: usize, i: usize, j: usize) -> Result<Image<T>> {
    for (op_len, d, idx) in [(xi.rows, d_r, i), (xi.cols, d_c, j)] {
        if d == 0 || d > op_len {
            return Err(Error::length("patch", d.max(1), op_len));
        }
        if idx < 1 || idx > op_len - d + 1 {
            return Err(Error::IndexOutOfRange {
                op: "patch",
                index: idx,
                lo: 1,
                hi: op_len - d + 1,
            });
        }
    }
    Ok(Image::from_fn(d_r, d_c, |a, b| xi.at(i + a - 1, j + b - 1).clone()))
}

type BlockFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// A function of an `r x c` block (passed row-major) to one sample.
pub struct Kernel2<T> {
    rows: usize,
    cols: usize,
    func: BlockFn<T>,
}

impl<T> Clone for Kernel2<T> {
    fn clone(&self) -> Self {
        Kernel2 {
            rows: self.rows,
            cols: self.cols,
            func: Arc::clone(&self.func),
        }
    }
}

impl<T> fmt::Debug for Kernel2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel2({}x{})", self.rows, self.cols)
    }
}

impl<T> Kernel2<T> {
    pub fn new(rows: usize, cols: usize, func: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        assert!(rows > 0 && cols > 0, "kernel block must be non-empty");
        Kernel2 {
            rows,
            cols,
            func: Arc::new(func),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn eval(&self, block: &[T]) -> T {
        debug_assert_eq!(block.len(), self.rows * self.cols);
        (self.func)(block)
    }
}

impl<T: Clone + 'static> Kernel2<T> {
    /// The 1x1 identity.
    pub fn identity() -> Self {
        Kernel2::new(1, 1, |w: &[T]| w[0].clone())
    }
}

fn blocks<T: Clone>(
    xi: &Image<T>,
    h: &Kernel2<T>,
    (step_r, step_c): (usize, usize),
    (out_r, out_c): (usize, usize),
) -> Image<T> {
    let (kr, kc) = h.shape();
    let mut buf = Vec::with_capacity(kr * kc);
    Image::from_fn(out_r, out_c, |i, j| {
        buf.clear();
        let (r0, c0) = ((i - 1) * step_r, (j - 1) * step_c);
        for a in 0..kr {
            let start = (r0 + a) * xi.cols + c0;
            buf.extend_from_slice(&xi.data[start..start + kc]);
        }
        h.eval(&buf)
    })
}

/// Applies `f` to every block of its shape, advancing one pixel at a time.
pub fn slide2d<T: Clone>(f: &Kernel2<T>, xi: &Image<T>) -> Result<Image<T>> {
    let (cr, cc) = f.shape();
    if xi.rows < cr || xi.cols < cc {
        return Err(Error::Shape {
            op: "slide2d",
            detail: format!("a {cr}x{cc} kernel does not fit a {}x{} image", xi.rows, xi.cols),
        });
    }
    Ok(blocks(xi, f, (1, 1), (xi.rows - cr + 1, xi.cols - cc + 1)))
}

/// Applies `g` to non-overlapping blocks of its shape.
pub fn stride2d<T: Clone>(g: &Kernel2<T>, xi: &Image<T>) -> Result<Image<T>> {
    let (kr, kc) = g.shape();
    if !xi.rows.is_multiple_of(kr) {
        return Err(Error::divisibility("stride2d", "k_r", kr, "rows", xi.rows));
    }
    if !xi.cols.is_multiple_of(kc) {
        return Err(Error::divisibility("stride2d", "k_c", kc, "cols", xi.cols));
    }
    Ok(blocks(xi, g, (kr, kc), (xi.rows / kr, xi.cols / kc)))
}

/// A set of equally sized fragment images, `frags_r * frags_c` of them.
///
/// Pixel `(mu_r, mu_c)` of fragment `(nu_r, nu_c)` corresponds to entry
/// `(mu_r, nu_r)` of a one-dimensional fragmented signal along the rows and
/// `(mu_c, nu_c)` along the columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentedImage<T> {
    q_r: usize,
    q_c: usize,
    s_r: usize,
    s_c: usize,
    // indexed by ((mu_r - 1) * s_r + nu_r - 1) * (q_c * s_c) + (mu_c - 1) * s_c + nu_c - 1
    data: Vec<T>,
}

impl<T: Clone> FragmentedImage<T> {
    /// One fragment holding the whole image.
    pub fn from_image(xi: &Image<T>) -> Self {
        FragmentedImage {
            q_r: xi.rows,
            q_c: xi.cols,
            s_r: 1,
            s_c: 1,
            data: xi.data.clone(),
        }
    }

    fn from_fn(
        q_r: usize,
        q_c: usize,
        s_r: usize,
        s_c: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(q_r * q_c * s_r * s_c);
        for mu_r in 1..=q_r {
            for nu_r in 1..=s_r {
                for mu_c in 1..=q_c {
                    for nu_c in 1..=s_c {
                        data.push(f(mu_r, nu_r, mu_c, nu_c));
                    }
                }
            }
        }
        FragmentedImage {
            q_r,
            q_c,
            s_r,
            s_c,
            data,
        }
    }

    /// Entry `(mu_r, nu_r, mu_c, nu_c)`.
    pub fn at(&self, mu_r: usize, nu_r: usize, mu_c: usize, nu_c: usize) -> &T {
        let row = (mu_r - 1) * self.s_r + nu_r - 1;
        let col = (mu_c - 1) * self.s_c + nu_c - 1;
        &self.data[row * self.q_c * self.s_c + col]
    }

    /// Shape of each fragment image.
    pub fn fragment_shape(&self) -> (usize, usize) {
        (self.q_r, self.q_c)
    }

    /// Numbers of row and column fragments.
    pub fn fragment_grid(&self) -> (usize, usize) {
        (self.s_r, self.s_c)
    }

    pub fn fragment_count(&self) -> usize {
        self.s_r * self.s_c
    }

    /// Fragment with 1-based linear index `n`.
    pub fn fragment(&self, n: usize) -> Image<T> {
        assert!((1..=self.fragment_count()).contains(&n));
        let (nu_r, nu_c) = ((n - 1) / self.s_c + 1, (n - 1) % self.s_c + 1);
        Image::from_fn(self.q_r, self.q_c, |a, b| self.at(a, nu_r, b, nu_c).clone())
    }

    /// All fragments in linear-index order.
    pub fn fragments(&self) -> Vec<Image<T>> {
        (1..=self.fragment_count()).map(|n| self.fragment(n)).collect()
    }

    /// Rebuilds a fragmented image from fragments in linear-index order.
    pub fn from_fragments(s_r: usize, s_c: usize, frags: &[Image<T>]) -> Result<Self> {
        let first = frags.first().ok_or_else(|| Error::Shape {
            op: "FragmentedImage::from_fragments",
            detail: "no fragments".into(),
        })?;
        let (q_r, q_c) = first.shape();
        if frags.len() != s_r * s_c || frags.iter().any(|f| f.shape() != (q_r, q_c)) {
            return Err(Error::Shape {
                op: "FragmentedImage::from_fragments",
                detail: format!("expected {s_r}x{s_c} fragments of equal shape"),
            });
        }
        Ok(Self::from_fn(q_r, q_c, s_r, s_c, |a, nr, b, nc| {
            frags[(nr - 1) * s_c + nc - 1].at(a, b).clone()
        }))
    }

    /// The image held by a single fragment.
    pub fn into_image(self) -> Result<Image<T>> {
        if self.fragment_count() != 1 {
            return Err(Error::Shape {
                op: "FragmentedImage::into_image",
                detail: format!("{} fragments", self.fragment_count()),
            });
        }
        Image::new(self.q_r, self.q_c, self.data)
    }

    fn map_fragments(&self, h: impl Fn(&Image<T>) -> Result<Image<T>>) -> Result<Self> {
        let out = self.fragments().iter().map(h).collect::<Result<Vec<_>>>()?;
        Self::from_fragments(self.s_r, self.s_c, &out)
    }
}

/// Fragments rows by `k_r` and columns by `k_c`.
pub fn fragment2d<T: Clone>(k_r: usize, k_c: usize, chi: &FragmentedImage<T>) -> Result<FragmentedImage<T>> {
    assert!(k_r >= 1 && k_c >= 1);
    if !chi.q_r.is_multiple_of(k_r) {
        return Err(Error::divisibility("fragment2d", "k_r", k_r, "fragment rows", chi.q_r));
    }
    if !chi.q_c.is_multiple_of(k_c) {
        return Err(Error::divisibility("fragment2d", "k_c", k_c, "fragment cols", chi.q_c));
    }
    Ok(FragmentedImage::from_fn(
        chi.q_r / k_r,
        chi.q_c / k_c,
        k_r * chi.s_r,
        k_c * chi.s_c,
        |mu_r, nu_r, mu_c, nu_c| {
            let (a_r, b_r) = fragment_source(k_r, chi.s_r, mu_r, nu_r);
            let (a_c, b_c) = fragment_source(k_c, chi.s_c, mu_c, nu_c);
            chi.at(a_r, b_r, a_c, b_c).clone()
        },
    ))
}

/// Inverse of [`fragment2d`].
pub fn defragment2d<T: Clone>(k_r: usize, k_c: usize, chi: &FragmentedImage<T>) -> Result<FragmentedImage<T>> {
    assert!(k_r >= 1 && k_c >= 1);
    if !chi.s_r.is_multiple_of(k_r) {
        return Err(Error::divisibility(
            "defragment2d",
            "k_r",
            k_r,
            "row fragments",
            chi.s_r,
        ));
    }
    if !chi.s_c.is_multiple_of(k_c) {
        return Err(Error::divisibility(
            "defragment2d",
            "k_c",
            k_c,
            "column fragments",
            chi.s_c,
        ));
    }
    let (s_r, s_c) = (chi.s_r / k_r, chi.s_c / k_c);
    Ok(FragmentedImage::from_fn(
        k_r * chi.q_r,
        k_c * chi.q_c,
        s_r,
        s_c,
        |mu_r, nu_r, mu_c, nu_c| {
            let (a_r, b_r) = defragment_source(k_r, s_r, mu_r, nu_r);
            let (a_c, b_c) = defragment_source(k_c, s_c, mu_c, nu_c);
            chi.at(a_r, b_r, a_c, b_c).clone()
        },
    ))
}

/// One 2D layer: block kernel `f` followed by block pooling `g`.
#[derive(Clone, Debug)]
pub struct Layer2<T> {
    pub f: Kernel2<T>,
    pub g: Kernel2<T>,
}

/// A chain of 2D layers with per-axis receptive fields.
#[derive(Clone, Debug)]
pub struct Chain2D<T> {
    layers: Vec<Layer2<T>>,
    dummy: T,
    b: (usize, usize),
    kstar: (usize, usize),
}

impl<T: Clone> Chain2D<T> {
    pub fn new(layers: Vec<Layer2<T>>, dummy: T) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::IllFormedChain {
                layer: 0,
                reason: "a chain needs at least one layer".into(),
            });
        }
        let rows: Vec<_> = layers.iter().map(|l| (l.f.rows, l.g.rows)).collect();
        let cols: Vec<_> = layers.iter().map(|l| (l.f.cols, l.g.cols)).collect();
        let b = (receptive_field(&rows), receptive_field(&cols));
        let kstar = (
            rows.iter().map(|&(_, k)| k).product(),
            cols.iter().map(|&(_, k)| k).product(),
        );
        Ok(Chain2D {
            layers,
            dummy,
            b,
            kstar,
        })
    }

    pub fn layers(&self) -> &[Layer2<T>] {
        &self.layers
    }

    pub fn dummy(&self) -> &T {
        &self.dummy
    }

    /// `(B_r, B_c)`.
    pub fn receptive_field(&self) -> (usize, usize) {
        self.b
    }

    /// Total stride products along rows and columns.
    pub fn stride_product(&self) -> (usize, usize) {
        self.kstar
    }

    pub fn with_dummy(&self, dummy: T) -> Self {
        Chain2D { dummy, ..self.clone() }
    }

    /// Evaluates the chain on one `B_r x B_c` patch.
    pub fn eval_stride2d(&self, rho: &Image<T>) -> Result<T> {
        if rho.shape() != self.b {
            return Err(Error::Precondition {
                op: "eval_stride2d",
                detail: format!(
                    "patch is {}x{}, receptive field is {}x{}",
                    rho.rows, rho.cols, self.b.0, self.b.1
                ),
            });
        }
        let mut cur = rho.clone();
        for l in &self.layers {
            cur = stride2d(&l.g, &slide2d(&l.f, &cur)?)?;
        }
        debug_assert_eq!(cur.shape(), (1, 1));
        Ok(cur.data.swap_remove(0))
    }

    /// Fragmentation-based evaluation of the whole image. Needs
    /// `k*_r | rows - B_r + 1` and `k*_c | cols - B_c + 1`.
    pub fn eval_slide2d(&self, xi: &Image<T>) -> Result<FragmentedImage<T>> {
        self.check_size("eval_slide2d", xi)?;
        let (br, bc) = self.b;
        let (kr, kc) = self.kstar;
        if !(xi.rows - br + 1).is_multiple_of(kr) {
            return Err(Error::divisibility(
                "eval_slide2d",
                "k*_r",
                kr,
                "rows - B_r + 1",
                xi.rows - br + 1,
            ));
        }
        if !(xi.cols - bc + 1).is_multiple_of(kc) {
            return Err(Error::divisibility(
                "eval_slide2d",
                "k*_c",
                kc,
                "cols - B_c + 1",
                xi.cols - bc + 1,
            ));
        }
        let mut chi = FragmentedImage::from_image(xi);
        for l in &self.layers {
            chi = chi.map_fragments(|img| slide2d(&l.g, &slide2d(&l.f, img)?))?;
            let (gr, gc) = l.g.shape();
            chi = fragment2d(gr, gc, &chi)?;
        }
        Ok(chi)
    }

    /// Samples appended along rows and columns by [`Chain2D::exact_scan2d`].
    pub fn stuffing2d(&self, rows: usize, cols: usize) -> Result<(usize, usize)> {
        let (br, bc) = self.b;
        if rows < br {
            return Err(Error::length("exact_scan2d", br, rows));
        }
        if cols < bc {
            return Err(Error::length("exact_scan2d", bc, cols));
        }
        let pad = |n: usize, k: usize| {
            let r = rem(n, k);
            if r == 0 {
                0
            } else {
                k - r
            }
        };
        Ok((pad(rows - br + 1, self.kstar.0), pad(cols - bc + 1, self.kstar.1)))
    }

    /// Dense evaluation on every patch: output entry `(i, j)` equals
    /// [`Chain2D::eval_stride2d`] on the patch at `(i, j)`.
    pub fn exact_scan2d(&self, xi: &Image<T>) -> Result<Image<T>> {
        let (sr, sc) = self.stuffing2d(xi.rows, xi.cols)?;
        let stuffed = Image::from_fn(xi.rows + sr, xi.cols + sc, |i, j| {
            if i <= xi.rows && j <= xi.cols {
                xi.at(i, j).clone()
            } else {
                self.dummy.clone()
            }
        });
        let (kr, kc) = self.kstar;
        let full = defragment2d(kr, kc, &self.eval_slide2d(&stuffed)?)?.into_image()?;
        let (br, bc) = self.b;
        Ok(Image::from_fn(xi.rows - br + 1, xi.cols - bc + 1, |i, j| {
            full.at(i, j).clone()
        }))
    }

    /// Per-patch reference evaluation of the same output as
    /// [`Chain2D::exact_scan2d`].
    pub fn scan2d_reference(&self, xi: &Image<T>) -> Result<Image<T>> {
        self.check_size("scan2d_reference", xi)?;
        let (br, bc) = self.b;
        let mut out = Vec::with_capacity((xi.rows - br + 1) * (xi.cols - bc + 1));
        for i in 1..=xi.rows - br + 1 {
            for j in 1..=xi.cols - bc + 1 {
                out.push(self.eval_stride2d(&patch(xi, br, bc, i, j)?)?);
            }
        }
        Image::new(xi.rows - br + 1, xi.cols - bc + 1, out)
    }

    fn check_size(&self, op: &'static str, xi: &Image<T>) -> Result<()> {
        if xi.rows < self.b.0 {
            return Err(Error::length(op, self.b.0, xi.rows));
        }
        if xi.cols < self.b.1 {
            return Err(Error::length(op, self.b.1, xi.cols));
        }
        Ok(())
    }
}
