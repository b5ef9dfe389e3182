from .app import ModelRuntime, create_app
from .schemas import API_VERSION
from .sessions import Session, SessionBusy, SessionStore, UnknownSession
