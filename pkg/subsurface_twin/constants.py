"""
Global constants used within the pipescan project
"""

from scipy.constants import speed_of_light

SPEED_OF_LIGHT: float = speed_of_light
""" The speed of light in vacuum in m/s """

VERSION: str = "1.0.0"
""" The pipescan version recorded in run.json """

DEFAULT_SEED: int = 1234
""" The seed used when neither --seed nor PIPESCAN_SEED is given """

SEED_ENV_VAR: str = "PIPESCAN_SEED"
""" The environment variable read as the seed fallback """

# Reference acquisition (laboratory rig)

SCAN_LENGTH_M: float = 1.2
""" The length of the scan line in meters """

N_POSITIONS: int = 45
""" The number of antenna positions along the scan line """

F_MIN_HZ: int = 1_200_000_000
""" The lowest swept frequency in hertz """

F_MAX_HZ: int = 3_775_000_000
""" The highest swept frequency in hertz """

F_STEP_HZ: int = 25_000_000
""" The frequency step of the sweep in hertz """

ANTENNA_HEIGHT_M: float = 0.0
""" The height of the (monostatic) antenna above the soil surface in meters """

TX_POWER_DBM: float = 15.0
""" The transmitter power in dBm, metadata only """

ANTENNA_GAIN_DB: float = 7.0
""" The gain of both the transmitting and the receiving antenna in dB, metadata only """

LNA_GAIN_DB: float = 21.0
""" The gain of the low noise amplifier in dB, metadata only """

SCAN_DURATION_MIN: float = 14.0
""" The time taken by one B-scan in minutes """

N_BANDS: int = 16
""" The number of sub-bands each B-scan is sliced into """

BAND_SPACING_HZ: int = 10_000_000
""" The offset between the start frequencies of consecutive bands in hertz """

FREQUENCY_TOLERANCE: float = 1e-6
""" The tolerance (in frequency steps) when counting frequency points """

# Soil and scene

DRY_SOIL_PERMITTIVITY: float = 3.03
""" The relative permittivity of dry soil, the Topp polynomial at zero water content """

SOIL_LOSS_TANGENT: float = 0.01
""" The loss tangent of dry background soil """

SATURATION_WATER_CONTENT: float = 0.4
""" The volumetric water content of saturated soil """

WATER_LOSS_FACTOR: float = 0.3
""" The loss tangent added per unit of volumetric water content """

PIPE_DIAMETER_M: float = 0.045
""" The diameter of the buried pipe in meters """

PIPE_DEPTH_M: float = 0.12
""" The depth of the centre of the buried pipe in meters """

PIPE_CONTRAST_DRY: float = -0.5
""" The contrast of an empty (air filled) PVC pipe """

PIPE_CONTRAST_WET: float = 2.0
""" The contrast of a water filled pipe """

MOIST_REGION_RADIUS_M: float = 0.08
""" The radius of the moist soil bag placed over the pipe in meters """

PEBBLE_CONTRAST: complex = 0.5 + 0.0j
""" The contrast of a soil pebble """

ROOT_CONTRAST: complex = 1.5 + 0.3j
""" The contrast of a plant root, which holds water """

CLUTTER_DENSITY_COUNTS: dict[str, int] = {"none": 0, "low": 3, "moderate": 7, "high": 15}
""" The number of clutter points added for each qualitative density """

PEBBLE_RADIUS_RANGE_M: tuple[float, float] = (0.005, 0.015)
""" The range of pebble radii in meters """

ROOT_RADIUS_RANGE_M: tuple[float, float] = (0.005, 0.010)
""" The range of root cross-section radii in meters """

# Simulation

DEFAULT_SNR_DB: float = 25.0
""" The signal to noise ratio of simulated B-scans in dB """

DEFAULT_CLUTTER_GAIN: float = 2.0
""" The gain of the rank-1 direct coupling clutter term """

CLUTTER_GAIN_JITTER: float = 0.5
""" The relative spread of the clutter gain between dataset samples """

PIXEL_CHUNK: int = 512
""" The number of pixels processed at once when summing over a contrast map """

# Imaging

IMAGE_DEPTH_M: float = 0.4
""" The depth of the imaging area in meters """

IMAGE_PIXELS: int = 96
""" The number of pixels along each axis of BPA images """

BAA_PIXELS: int = 24
""" The number of pixels along each axis of the BAA reconstruction mesh """

CLASSIFIER_PIXELS: int = 48
""" The side length of the images fed to the classifiers """

DEFAULT_TAU: float = 1e-2
""" The default relative singular value threshold of the truncated SVD """

DEFAULT_N_REMOVE: int = 1
""" The default number of leading singular components removed as clutter """

# Dataset

MOISTURE_LEVELS: tuple[float, ...] = (0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0)
""" The soil moisture fractions of the eight soil bags """

SPLIT_RATIOS: tuple[float, float, float] = (0.6, 0.2, 0.2)
""" The train, validation and test fractions """

# Learning

KNN_K: int = 5
""" The default number of neighbours of the KNN classifier """

CONV1_FILTERS: int = 8
""" The number of filters of the first convolutional layer """

CONV2_FILTERS: int = 16
""" The number of filters of the second convolutional layer """

DENSE_UNITS: int = 64
""" The width of the hidden fully connected layer """

OUTPUT_INIT_SCALE: float = 1e-2
""" The scale of the output layer initialisation relative to the He scale """

LEARNING_RATE: float = 1e-3
""" The Adam learning rate """

ADAM_BETA1: float = 0.9
""" The Adam first moment decay """

ADAM_BETA2: float = 0.999
""" The Adam second moment decay """

ADAM_EPSILON: float = 1e-8
""" The Adam denominator offset """

BATCH_SIZE: int = 16
""" The CNN mini-batch size """

MAX_EPOCHS: int = 100
""" The maximum number of CNN training epochs """

PATIENCE: int = 10
""" The number of epochs without validation improvement before training stops """

# Leak tracking

LEAK_SCANS: int = 11
""" The number of B-scans in the leak time series """

LEAK_START_RADIUS_M: float = 0.03
""" The radius of the moist plume at the first scan in meters """

LEAK_GROWTH_M: float = 0.005
""" The growth of the plume radius between consecutive scans in meters """

LEAK_SM_FRACTION: float = 0.25
""" The moisture of the soil wetted by the leak """
