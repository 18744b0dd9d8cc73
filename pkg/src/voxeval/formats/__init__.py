"""File ingestion and interchange: binvox, NIfTI-1 subset, PLY, SEV, voxelization."""

from .binvox import read_binvox, write_binvox
from .nifti import read_nifti
from .ply import read_ply, read_scannet_scene
from .pointcloud import PointCloud, voxelize
from .sev import load_sev, read_sev, save_sev, write_sev

__all__ = [
    "PointCloud",
    "load_sev",
    "read_binvox",
    "read_nifti",
    "read_ply",
    "read_scannet_scene",
    "read_sev",
    "save_sev",
    "voxelize",
    "write_binvox",
    "write_sev",
]
