//! SAMT binary tensor format.
//!
//! Layout: magic bytes `SAMT`, version byte `0x01`, a `u8` rank, `rank`
//! little-endian `u32` extents, then the values as row-major little-endian
//! 64-bit floats. Round-trips are bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, SamError};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"SAMT";
const VERSION: u8 = 0x01;

pub fn write_samt<W: Write>(tensor: &Tensor, mut w: W) -> Result<()> {
    if tensor.rank() > u8::MAX as usize {
        return Err(SamError::Format("tensor rank exceeds u8".into()));
    }
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION, tensor.rank() as u8])?;
    for &extent in tensor.shape() {
        let e = u32::try_from(extent)
            .map_err(|_| SamError::Format(format!("extent {extent} exceeds u32")))?;
        w.write_all(&e.to_le_bytes())?;
    }
    for &v in tensor.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_samt<R: Read>(mut r: R) -> Result<Tensor> {
    let mut head = [0u8; 6];
    r.read_exact(&mut head)
        .map_err(|_| SamError::Format("truncated SAMT header".into()))?;
    if &head[..4] != MAGIC {
        return Err(SamError::Format("bad SAMT magic".into()));
    }
    if head[4] != VERSION {
        return Err(SamError::Format(format!("unsupported SAMT version {}", head[4])));
    }
    let rank = head[5] as usize;
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)
            .map_err(|_| SamError::Format("truncated SAMT extents".into()))?;
        shape.push(u32::from_le_bytes(b) as usize);
    }
    let count: usize = shape.iter().product();
    let mut data = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b)
            .map_err(|_| SamError::Format("truncated SAMT payload".into()))?;
        data.push(f64::from_le_bytes(b));
    }
    Tensor::new(shape, data)
}

pub fn save_samt(tensor: &Tensor, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_samt(tensor, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| SamError::Io(format!("{}: {e}", path.display())))
}

pub fn load_samt(path: &Path) -> Result<Tensor> {
    let bytes =
        std::fs::read(path).map_err(|e| SamError::Io(format!("{}: {e}", path.display())))?;
    read_samt(bytes.as_slice())
}
