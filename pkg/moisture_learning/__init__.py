"""
    Soil moisture classification from multi-band microwave images
"""
