"""Shared physical constants and array geometry."""

K_BOLTZMANN = 1.380649e-23  # J/K

# Pixel array geometry is fixed in silicon: 128x128 pixels feeding a
# 16-row x 128-column analog memory through 128 column-parallel DS3 units.
ARRAY_SIZE = 128
MEMORY_ROWS = 16
MEMORY_COLS = 128
FILTER_SIZE = 16
NUM_ADC_GROUPS = 8       # one SC amplifier + SAR ADC per 16 columns
ADC_GROUP_WIDTH = 16
MAX_FILTERS = 32

ROOM_TEMPERATURE = 298.15  # K (25 degC)
