from .app import ServiceConfig, create_app
from .encoders import HashedEncoder, SentenceTransformerEncoder, load_encoder

__version__ = "0.1.0"
