import logging
import os

from ssl_forge.settings import load_environment, log_level, thread_cap


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("SSL_FORGE_THREADS", raising=False)
    assert thread_cap() == 1
    monkeypatch.setenv("SSL_FORGE_THREADS", "4")
    assert thread_cap() == 4
    monkeypatch.setenv("SSL_FORGE_THREADS", "0")
    assert thread_cap() == 1
    monkeypatch.setenv("SSL_FORGE_THREADS", "many")
    assert thread_cap() == 1


def test_log_level(monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "debug")
    assert log_level() == logging.DEBUG
    assert log_level(quiet=True) == logging.WARNING
    monkeypatch.setenv("LOG_LEVEL", "chatty")
    assert log_level() == logging.INFO


def test_env_file_is_loaded(tmp_path, monkeypatch):
    monkeypatch.delenv("SSL_FORGE_THREADS", raising=False)
    env = tmp_path / "ssl_forge.env"
    env.write_text("SSL_FORGE_THREADS=3\n", encoding="utf-8")
    try:
        load_environment(str(env))
        assert thread_cap() == 3
    finally:
        os.environ.pop("SSL_FORGE_THREADS", None)
