from app.utils.settings import Settings, get_settings, configure_logging
from app.utils.matrix_io import decode_matrix, encode_matrix, load_matrix
