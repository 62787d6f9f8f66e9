# ssl_forge package initialization
