"""
    Binary file formats of B-scans, images and trained models
"""
