# core package initialization
