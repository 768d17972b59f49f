"""An abstraction of a binary 8-bit grayscale Portable GrayMap (PGM) image.

Notes:
    - http://netpbm.sourceforge.net/doc/pgm.html
    - only the binary P5 variant with maxval < 256 is supported
"""
import os
from typing import Tuple
from typing import ClassVar
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PGM:
    """A binary 8-bit grayscale image."""

    # The magic bytes expected at the start of the header: "P5"
    MAGIC: ClassVar[bytes] = b'P5'
    width: int
    height: int
    maxval: int
    pixels: np.ndarray

    @staticmethod
    def _tokens(raw: bytes, count: int) -> Tuple[list, int]:
        """Return the first count whitespace separated header tokens and the data offset."""
        tokens = []
        index = 0
        while len(tokens) < count:
            # skip whitespace and comments between tokens
            while index < len(raw) and raw[index:index + 1].isspace():
                index += 1
            if raw[index:index + 1] == b'#':
                while index < len(raw) and raw[index:index + 1] not in (b'\n', b'\r'):
                    index += 1
                continue
            start = index
            while index < len(raw) and not raw[index:index + 1].isspace():
                index += 1
            if start == index:
                raise ValueError('PGM header is truncated.')
            tokens.append(raw[start:index])
        # exactly one whitespace byte separates the header from the raster
        return tokens, index + 1

    @classmethod
    def from_bytes(cls, raw: bytes) -> 'PGM':
        """
        Parse a PGM image from its file contents.

        Args:
            raw: the bytes of a P5 file

        Returns:
            the parsed image

        """
        if raw[:2] != cls.MAGIC:
            raise ValueError('PGM missing magic number in header.')
        tokens, offset = cls._tokens(raw, 4)
        try:
            width, height, maxval = (int(token) for token in tokens[1:])
        except ValueError:
            raise ValueError('PGM header holds non-integer dimensions.')
        if width <= 0 or height <= 0:
            raise ValueError('PGM dimensions must be positive.')
        if not 0 < maxval < 256:
            raise ValueError('PGM maxval {} is not 8-bit.'.format(maxval))
        raster = np.frombuffer(raw, dtype=np.uint8, offset=offset)
        if raster.size < width * height:
            raise ValueError('PGM raster is truncated.')
        pixels = raster[:width * height].reshape(height, width).copy()
        return cls(width=width, height=height, maxval=maxval, pixels=pixels)

    @classmethod
    def from_path(cls, path: str) -> 'PGM':
        """
        Load a PGM image from disk.

        Args:
            path: the path to the .pgm file

        Returns:
            the parsed image

        """
        # make sure the path is a string or path-like
        if not isinstance(path, (str, os.PathLike)):
            raise TypeError('path must be of type: str.')
        # make sure the path exists
        if not os.path.exists(path):
            raise ValueError('path points to non-existent file: {}.'.format(path))
        with open(path, 'rb') as stream:
            return cls.from_bytes(stream.read())

    @property
    def luminance(self) -> np.ndarray:
        """Return the pixels normalized to [0, 1]."""
        return self.pixels.astype(np.float64) / self.maxval

    def to_bytes(self) -> bytes:
        """Return the image encoded as a P5 file."""
        header = b'%s\n%d %d\n%d\n' % (self.MAGIC, self.width, self.height, self.maxval)
        return header + np.ascontiguousarray(self.pixels, dtype=np.uint8).tobytes()


def write_pgm(path: str, luminance: np.ndarray) -> None:
    """Write a [0, 1] luminance array as an 8-bit P5 image."""
    luminance = np.asarray(luminance, dtype=np.float64)
    pixels = np.clip(np.rint(luminance * 255), 0, 255).astype(np.uint8)
    image = PGM(width=pixels.shape[1], height=pixels.shape[0], maxval=255, pixels=pixels)
    with open(path, 'wb') as stream:
        stream.write(image.to_bytes())


# explicitly define the outward facing API of this module
__all__ = [PGM.__name__, write_pgm.__name__]
