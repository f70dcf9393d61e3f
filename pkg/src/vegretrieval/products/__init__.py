"""Gridded product generation, encoding, container I/O and statistics."""

from .compare import CompareReport, intercompare, qc_summary
from .encoding import FILL_INT16, K0_SCALE, SCALES, decode_plane, encode_plane
from .grid import GridSpec, project, unproject
from .retrieval import retrieve_tile, valid_input_mask
from .tiles import (AGE_FILL, QC_CARRIED, QC_CLIPPED, QC_UNPROCESSED, InputTile, ProductTile,
                    product_filename, read_input, read_product, write_input, write_product)
from .synthetic import synthetic_input_tile
