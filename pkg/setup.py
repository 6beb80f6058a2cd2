from setuptools import setup

with open('README.md', 'r', encoding='utf-8') as ld:
    long_description = ld.read()

setup(
    name='python-fagan',
    version='0.1.0',
    python_requires='>=3.8',
    description='python-fagan provides vocoder signal tools, losses, metrics and a toy GAN harness.',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=['fagan'],
    include_package_data=True,
    install_requires=['numpy>=1.17', 'scipy>=1.4', 'tqdm>=4.23'],
    extras_require={'pandas': ['pandas>=0.21']},
    entry_points={'console_scripts': ['fagan=fagan.cli:main']},
    classifiers=(
        'Programming Language :: Python',
        'Programming Language :: Python :: 3.8',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Topic :: Multimedia :: Sound/Audio :: Analysis'
    )
)
