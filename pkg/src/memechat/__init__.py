"""memechat: a unified text+meme dialogue model, trained with a three-part
multi-task objective and served over a small HTTP chat API."""

__version__ = "0.1.0"
