"""Reader and writer for the IDX binary array format.

An IDX file starts with a 4-byte big-endian magic ``0x0000TTNN`` where ``TT``
is the element type code and ``NN`` the number of dimensions, followed by
``NN`` big-endian uint32 sizes and the row-major payload.
"""

import struct

import numpy as np

_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
_CODES = {dt.newbyteorder("="): code for code, dt in _DTYPES.items()}


def read_idx_array(path):
    """Raw array stored in an IDX file, with its shape and element type."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise ValueError(f"{path}: file too short for an IDX header")
    zero, code, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0 or code not in _DTYPES or ndim == 0:
        raise ValueError(f"{path}: bad IDX magic 0x{int.from_bytes(raw[:4], 'big'):08X}")
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise ValueError(f"{path}: truncated IDX header")
    shape = struct.unpack(f">{ndim}I", raw[4:head])
    dt = _DTYPES[code]
    need = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
    if len(raw) - head < need:
        raise ValueError(f"{path}: truncated payload ({len(raw) - head} of {need} bytes)")
    return np.frombuffer(raw, dtype=dt, count=need // dt.itemsize, offset=head).reshape(shape)


def read_idx(path, labels_path=None, label_filter=None):
    """Load an IDX file as an (N, d) float matrix.

    Image files (3 or more dimensions) are flattened to one row per item and
    ``uint8`` pixels are scaled to ``[0, 1]``.  A one-dimensional file (labels)
    comes back as an (N, 1) column.  With ``labels_path`` and ``label_filter``
    only rows whose label equals ``label_filter`` are kept.
    """
    arr = read_idx_array(path)
    X = arr.reshape(arr.shape[0], -1).astype(float)
    if arr.dtype == np.dtype(">u1"):
        X /= 255.0
    if label_filter is not None:
        if labels_path is None:
            raise ValueError("label_filter needs labels_path")
        labels = read_idx_array(labels_path).ravel()
        if labels.size != X.shape[0]:
            raise ValueError(f"{labels.size} labels for {X.shape[0]} items")
        X = X[labels == label_filter]
    return X


def write_idx(path, array):
    """Write ``array`` in IDX layout; the element type must be one IDX supports."""
    a = np.asarray(array)
    code = _CODES.get(a.dtype.newbyteorder("="))
    if code is None:
        raise ValueError(f"dtype {a.dtype} has no IDX type code")
    if a.ndim == 0 or a.ndim > 255:
        raise ValueError("IDX arrays need between 1 and 255 dimensions")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">HBB", 0, code, a.ndim))
        fh.write(struct.pack(f">{a.ndim}I", *a.shape))
        fh.write(np.ascontiguousarray(a, dtype=_DTYPES[code]).tobytes())
